// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/stub_server.hpp"

#include <httplib.h>

#include <json.hpp>

#include "pingpong/critic.hpp"
#include "pingpong/errors.hpp"

namespace pingpong {

StubServer::StubServer(StubOptions options) : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

StubServer::~StubServer() { stop(); }

std::string StubServer::critic_reply(StubVerdict verdict) {
  CriticResponse r;
  if (verdict == StubVerdict::kConsistent) {
    r.score = 1.0;
    r.diagnosis = std::string(kConsistentSentinel);
  } else {
    r.score = 0.0;
    r.diagnosis = "1. component 2 is missing from the image.";
    r.refined = "A scene with components 0, 1 and 2, with component 2 clearly visible.";
    r.avoid = "clutter, overlapping clusters";
  }
  return critic_response_body(r);
}

std::string StubServer::denoise_reply(const std::string& request_body, StubDenoise mode) {
  const auto req = nlohmann::json::parse(request_body);
  const auto& x = req.at("x");
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  const std::size_t rows = mode == StubDenoise::kWrongShape ? x.size() + 1 : x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t dims = x.empty() ? 0 : x[0].size();
    eps.push_back(std::vector<double>(dims, 0.0));
  }
  nlohmann::ordered_json out;
  out["eps"] = std::move(eps);
  return out.dump();
}

void StubServer::install_routes() {
  server_->Post("/critic", [this](const httplib::Request& req, httplib::Response& res) {
    const int n = ++critic_count_;
    {
      std::lock_guard lock(mu_);
      critic_bodies_.push_back(req.body);
    }
    if (options_.die_after >= 0 && n > options_.die_after) {
      server_->stop();
      res.status = 503;
      res.set_content("{\"error\":\"stub stopped\"}", "application/json");
      return;
    }
    try {
      parse_critic_request(req.body);
    } catch (const ParseError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    res.set_content(critic_reply(options_.verdict), "application/json");
  });
  server_->Post("/denoise", [this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu_);
      denoise_bodies_.push_back(req.body);
    }
    try {
      res.set_content(denoise_reply(req.body, options_.denoise), "application/json");
    } catch (const nlohmann::json::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

void StubServer::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw Error("stub server: cannot bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw Error("stub server: cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    port_ = options_.port;
  }
}

void StubServer::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void StubServer::run() {
  bind();
  server_->listen_after_bind();
}

void StubServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void StubServer::shutdown() {
  if (server_) server_->stop();
}

void StubServer::wait() {
  if (thread_.joinable()) thread_.join();
}

std::string StubServer::endpoint() const { return "http://" + options_.host + ":" + std::to_string(port_); }

std::vector<std::string> StubServer::critic_requests() const {
  std::lock_guard lock(mu_);
  return critic_bodies_;
}

std::vector<std::string> StubServer::denoise_requests() const {
  std::lock_guard lock(mu_);
  return denoise_bodies_;
}

void StubServer::clear() {
  std::lock_guard lock(mu_);
  critic_bodies_.clear();
  denoise_bodies_.clear();
  critic_count_ = 0;
}

}  // namespace pingpong
