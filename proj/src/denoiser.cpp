// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <httplib.h>

#include "pingpong/errors.hpp"

namespace pingpong {

void GMMWorld::validate() const {
  if (means.rows() == 0) throw RangeError("world: needs at least one component");
  if (scales.size() != means.rows()) throw ShapeError("world: one scale per component required");
  if (!means.all_finite()) throw RangeError("world: means must be finite");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw RangeError("world: scales must be finite and > 0");
  }
}

int GMMWorld::nearest_component(std::span<const double> point) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < means.rows(); ++k) {
    double d = 0.0;
    auto mu = means.row(k);
    for (std::size_t i = 0; i < point.size(); ++i) d += (point[i] - mu[i]) * (point[i] - mu[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void to_json(nlohmann::json& j, const GMMWorld& w) {
  nlohmann::json means = nlohmann::json::array();
  for (std::size_t k = 0; k < w.means.rows(); ++k) {
    auto r = w.means.row(k);
    means.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j = {{"means", means}, {"scales", w.scales}};
}

void from_json(const nlohmann::json& j, GMMWorld& w) {
  const auto rows = j.at("means").get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw RangeError("world: needs at least one component");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw ShapeError("world: means have inconsistent dimension");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  w.means = Points(rows.size(), rows.front().size(), std::move(flat));
  w.scales = j.at("scales").get<std::vector<double>>();
}

AnalyticDenoiser::AnalyticDenoiser(GMMWorld world, std::shared_ptr<const NoiseSchedule> schedule, double lambda)
    : world_(std::move(world)), schedule_(std::move(schedule)), lambda_(lambda) {
  world_.validate();
  if (!(lambda_ >= 0.0)) throw RangeError("lambda: must be >= 0");
}

PosteriorTerms AnalyticDenoiser::posterior(const LatentState& x, const Condition& cond) const {
  if (x.t < 1) throw StepError("analytic_eps: undefined at t=0 (sqrt(1-alpha_bar_0) = 0)");
  const std::size_t K = world_.components();
  const std::size_t D = world_.dims();
  if (cond.components() != K) throw ShapeError("analytic_eps: condition length does not match component count");
  if (x.x.dims() != D) throw ShapeError("analytic_eps: latent dimension does not match world");

  const std::vector<double> w = effective_weights(cond, lambda_);
  const double ab = schedule_->alpha_bar(x.t);
  const double sab = std::sqrt(ab);

  std::vector<double> var(K), shrink(K), log_norm(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double s2 = world_.scales[k] * world_.scales[k];
    var[k] = ab * s2 + (1.0 - ab);
    shrink[k] = s2 * sab / var[k];
    log_norm[k] = w[k] > 0.0 ? std::log(w[k]) - 0.5 * static_cast<double>(D) * std::log(2.0 * std::numbers::pi * var[k])
                             : -std::numeric_limits<double>::infinity();
  }

  const std::size_t M = x.x.rows();
  PosteriorTerms out{std::vector<double>(M * K, 0.0), Points(M, D)};
  std::vector<double> logp(K);
  for (std::size_t i = 0; i < M; ++i) {
    auto xi = x.x.row(i);
    double max_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      if (w[k] <= 0.0) {
        logp[k] = -std::numeric_limits<double>::infinity();
        continue;
      }
      auto mu = world_.means.row(k);
      double d2 = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        const double r = xi[d] - sab * mu[d];
        d2 += r * r;
      }
      logp[k] = log_norm[k] - 0.5 * d2 / var[k];
      max_lp = std::max(max_lp, logp[k]);
    }
    double z = 0.0;
    double* resp = out.responsibilities.data() + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      resp[k] = w[k] > 0.0 ? std::exp(logp[k] - max_lp) : 0.0;
      z += resp[k];
    }
    auto m = out.posterior_mean.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      resp[k] /= z;
      if (resp[k] == 0.0) continue;
      auto mu = world_.means.row(k);
      for (std::size_t d = 0; d < D; ++d) m[d] += resp[k] * (mu[d] + shrink[k] * (xi[d] - sab * mu[d]));
    }
  }
  return out;
}

Points AnalyticDenoiser::predict(const LatentState& x, const Condition& cond) const {
  const PosteriorTerms post = posterior(x, cond);
  const double ab = schedule_->alpha_bar(x.t);
  const double sab = std::sqrt(ab);
  const double snoise = std::sqrt(1.0 - ab);
  Points eps(x.x.rows(), x.x.dims());
  auto e = eps.flat();
  auto xs = x.x.flat();
  auto ms = post.posterior_mean.flat();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = (xs[i] - sab * ms[i]) / snoise;
  return eps;
}

Points analytic_eps(const GMMWorld& world, const Condition& cond, const LatentState& x, const NoiseSchedule& s,
                    double lambda) {
  AnalyticDenoiser den(world, std::make_shared<NoiseSchedule>(s), lambda);
  return den.predict(x, cond);
}

PerturbationMode parse_perturbation_mode(const std::string& name) {
  if (name == "constant" || name == "constant-direction") return PerturbationMode::kConstantDirection;
  if (name == "random" || name == "random-per-call") return PerturbationMode::kRandomPerCall;
  throw RangeError("perturbation mode: unknown value '" + name + "'");
}

std::string to_string(PerturbationMode mode) {
  return mode == PerturbationMode::kConstantDirection ? "constant-direction" : "random-per-call";
}

PerturbedDenoiser::PerturbedDenoiser(std::shared_ptr<const Denoiser> base, double delta, PerturbationMode mode,
                                     std::uint64_t seed, std::vector<double> direction)
    : base_(std::move(base)), delta_(delta), mode_(mode), rng_(seed), direction_(std::move(direction)) {
  if (!(delta_ >= 0.0)) throw RangeError("delta: must be >= 0");
  if (!direction_.empty()) {
    double n = 0.0;
    for (double v : direction_) n += v * v;
    n = std::sqrt(n);
    if (!(n > 0.0)) throw RangeError("direction: must be non-zero");
    for (double& v : direction_) v /= n;
  }
}

Points PerturbedDenoiser::predict(const LatentState& x, const Condition& cond) const {
  Points eps = base_->predict(x, cond);
  const std::uint64_t call = calls_.fetch_add(1);
  if (delta_ == 0.0) return eps;
  const std::size_t D = eps.dims();
  std::vector<double> dir(D);
  if (mode_ == PerturbationMode::kConstantDirection) {
    if (direction_.empty()) {
      std::fill(dir.begin(), dir.end(), 1.0 / std::sqrt(static_cast<double>(D)));
    } else {
      if (direction_.size() != D) throw ShapeError("perturbed_eps: direction dimension mismatch");
      dir = direction_;
    }
  }
  // Random mode: blocks [call * ceil(M*D/2), ...) of the perturbation stream; one
  // normal vector per point, normalized.
  std::vector<double> normals;
  if (mode_ == PerturbationMode::kRandomPerCall) {
    normals.resize(eps.size());
    const std::uint64_t per_call = (eps.size() + 1) / 2;
    fill_normals(rng_, static_cast<std::uint64_t>(Stream::kPerturbation), call * per_call, normals);
  }
  for (std::size_t i = 0; i < eps.rows(); ++i) {
    if (mode_ == PerturbationMode::kRandomPerCall) {
      double n = 0.0;
      for (std::size_t d = 0; d < D; ++d) n += normals[i * D + d] * normals[i * D + d];
      n = std::sqrt(n);
      for (std::size_t d = 0; d < D; ++d) dir[d] = n > 0.0 ? normals[i * D + d] / n : (d == 0 ? 1.0 : 0.0);
    }
    auto row = eps.row(i);
    for (std::size_t d = 0; d < D; ++d) row[d] += delta_ * dir[d];
  }
  return eps;
}

std::shared_ptr<Denoiser> perturbed_eps(std::shared_ptr<const Denoiser> base, double delta, PerturbationMode mode,
                                        std::uint64_t seed) {
  return std::make_shared<PerturbedDenoiser>(std::move(base), delta, mode, seed);
}

Points CountingDenoiser::predict(const LatentState& x, const Condition& cond) const {
  calls_.fetch_add(1);
  return base_->predict(x, cond);
}

std::string denoise_request_body(const LatentState& x, double alpha_bar, const Condition& cond) {
  nlohmann::ordered_json j;
  j["t"] = x.t;
  j["alpha_bar"] = alpha_bar;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < x.x.rows(); ++i) {
    auto r = x.x.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["x"] = std::move(rows);
  j["cond"] = {{"weights", cond.weights}, {"suppress", cond.suppress}};
  return j.dump();
}

Points parse_denoise_response(const std::string& body, std::size_t rows, std::size_t dims) {
  nlohmann::json j = nlohmann::json::parse(body);  // throws on malformed JSON
  const auto& eps = j.at("eps");
  if (!eps.is_array() || eps.size() != rows) {
    throw ShapeError("denoise response: expected " + std::to_string(rows) + " rows, got " +
                     std::to_string(eps.is_array() ? eps.size() : 0));
  }
  Points out(rows, dims);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& r = eps[i];
    if (!r.is_array() || r.size() != dims) {
      throw ShapeError("denoise response: row " + std::to_string(i) + " does not have " + std::to_string(dims) +
                       " values");
    }
    for (std::size_t d = 0; d < dims; ++d) out.at(i, d) = r[d].get<double>();
  }
  return out;
}

Endpoint Endpoint::parse(const std::string& uri) {
  const auto scheme = uri.find("://");
  if (scheme == std::string::npos) throw RangeError("endpoint: '" + uri + "' lacks a scheme");
  const auto slash = uri.find('/', scheme + 3);
  if (slash == std::string::npos) return Endpoint{uri, ""};
  std::string prefix = uri.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return Endpoint{uri.substr(0, slash), prefix};
}

RemoteDenoiser::RemoteDenoiser(std::string endpoint, std::shared_ptr<const NoiseSchedule> schedule,
                               std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), parsed_(Endpoint::parse(endpoint_)), schedule_(std::move(schedule)),
      timeout_(timeout) {}

Points RemoteDenoiser::predict(const LatentState& x, const Condition& cond) const {
  const std::string body = denoise_request_body(x, schedule_->alpha_bar(x.t), cond);
  httplib::Client client(parsed_.base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  const std::string path = parsed_.prefix + "/denoise";

  httplib::Result res = client.Post(path, body, "application/json");
  if (!res) res = client.Post(path, body, "application/json");  // one retry on transport failure
  if (!res) throw RemoteError(endpoint_, x.t, "transport failure: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw RemoteError(endpoint_, x.t, "HTTP status " + std::to_string(res->status), res->body.substr(0, 200));
  }
  try {
    return parse_denoise_response(res->body, x.x.rows(), x.x.dims());
  } catch (const ShapeError& e) {
    throw RemoteError(endpoint_, x.t, std::string("shape mismatch: ") + e.what(), res->body.substr(0, 200));
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(endpoint_, x.t, std::string("malformed response: ") + e.what(), res->body.substr(0, 200));
  }
}

std::shared_ptr<Denoiser> remote_eps(const std::string& endpoint, std::shared_ptr<const NoiseSchedule> schedule,
                                     std::chrono::milliseconds timeout) {
  return std::make_shared<RemoteDenoiser>(endpoint, std::move(schedule), timeout);
}

}  // namespace pingpong
