// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace pingpong {

CriticKind parse_critic_kind(const std::string& name) {
  if (name == "oracle") return CriticKind::kOracle;
  if (name == "consistent") return CriticKind::kConsistent;
  if (name == "mllm") return CriticKind::kMllm;
  throw RangeError("critic.kind: unknown value '" + name + "'");
}

std::string to_string(CriticKind kind) {
  switch (kind) {
    case CriticKind::kOracle:
      return "oracle";
    case CriticKind::kConsistent:
      return "consistent";
    case CriticKind::kMllm:
      return "mllm";
  }
  return "oracle";
}

DenoiserKind parse_denoiser_kind(const std::string& name) {
  if (name == "analytic") return DenoiserKind::kAnalytic;
  if (name == "remote") return DenoiserKind::kRemote;
  throw RangeError("denoiser.kind: unknown value '" + name + "'");
}

std::string to_string(DenoiserKind kind) { return kind == DenoiserKind::kAnalytic ? "analytic" : "remote"; }

RunConfig benchmark_config() {
  RunConfig c;
  constexpr int kComponents = 5;
  constexpr double kRadius = 3.0;
  c.world.means = Points(kComponents, 2);
  for (int k = 0; k < kComponents; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / kComponents;
    c.world.means.at(k, 0) = kRadius * std::cos(angle);
    c.world.means.at(k, 1) = kRadius * std::sin(angle);
  }
  c.world.scales.assign(kComponents, 0.5);
  c.prompt.required = {{0, 0.4}, {1, 0.3}, {2, 0.3}};
  c.prompt.tolerance = 0.15;
  c.prompt.text = "40% red dots, 30% green dots and 30% blue dots; no orange or purple dots";
  Condition mis = encode(c.prompt, kComponents);
  mis.weights[2] = 0.0;
  mis.weights = normalize_weights(std::move(mis.weights), "benchmark");
  c.initial_condition = mis;
  c.sampler.seed = 0;
  return c;
}

RunConfig calibration_config() {
  RunConfig c = benchmark_config();
  c.initial_condition.reset();
  return c;
}

Condition RunConfig::condition() const {
  if (initial_condition) return *initial_condition;
  return encode(prompt, world.components());
}

RunConfig RunConfig::resolved() const {
  RunConfig c = *this;
  if (c.schedule.steps < 2) throw RangeError("schedule.T: must be >= 2");
  c.world.validate();
  c.prompt.validate(c.world.components());
  const Condition cond = c.condition();
  cond.validate();
  if (cond.components() != c.world.components()) {
    throw ShapeError("initial_condition: expected " + std::to_string(c.world.components()) + " components");
  }
  c.sampler = c.sampler.resolved(c.schedule.steps);
  if (c.critic.kind == CriticKind::kMllm && c.critic.endpoint.empty()) {
    throw RangeError("critic.endpoint: required for the mllm critic");
  }
  if (c.critic.image_size < 64) throw RangeError("critic.image_size: must be >= 64");
  if (c.denoiser.kind == DenoiserKind::kRemote && c.denoiser.endpoint.empty()) {
    throw RangeError("denoiser.endpoint: required for the remote denoiser");
  }
  if (c.workers < 0) throw RangeError("workers: must be >= 0");
  return c;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json sampler = c.sampler;
  j = nlohmann::json{
      {"schedule",
       {{"kind", to_string(c.schedule.kind)},
        {"T", c.schedule.steps},
        {"beta_start", c.schedule.beta_start},
        {"beta_end", c.schedule.beta_end}}},
      {"sampler", sampler},
      {"world", c.world},
      {"prompt", c.prompt},
      {"initial_condition", c.initial_condition ? nlohmann::json(*c.initial_condition) : nlohmann::json(nullptr)},
      {"critic",
       {{"kind", to_string(c.critic.kind)},
        {"endpoint", c.critic.endpoint},
        {"rounds", to_string(c.critic.rounds)},
        {"image_size", c.critic.image_size},
        {"structured_cond", c.critic.structured_cond},
        {"timeout_ms", c.critic.timeout_ms}}},
      {"denoiser",
       {{"kind", to_string(c.denoiser.kind)},
        {"endpoint", c.denoiser.endpoint},
        {"timeout_ms", c.denoiser.timeout_ms}}},
      {"workers", c.workers}};
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw RangeError(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw RangeError(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace

void merge_json(const nlohmann::json& j, RunConfig& c) {
  try {
    reject_unknown(j,
                   {"schedule", "sampler", "world", "prompt", "initial_condition", "critic", "denoiser", "workers",
                    "type"},
                   "config");
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      reject_unknown(s, {"kind", "T", "beta_start", "beta_end"}, "schedule");
      if (s.contains("kind")) c.schedule.kind = parse_schedule_kind(s.at("kind").get<std::string>());
      if (s.contains("T")) c.schedule.steps = s.at("T").get<int>();
      if (s.contains("beta_start")) c.schedule.beta_start = s.at("beta_start").get<double>();
      if (s.contains("beta_end")) c.schedule.beta_end = s.at("beta_end").get<double>();
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      reject_unknown(s,
                     {"method", "t_hi", "t_lo", "delta", "gamma", "tau_stop", "lambda", "kappa", "seed", "batch",
                      "lookahead", "injection", "persist_correction", "noise_placement", "ping_noise_scale"},
                     "sampler");
      from_json(s, c.sampler);
    }
    if (j.contains("world")) c.world = j.at("world").get<GMMWorld>();
    if (j.contains("prompt")) c.prompt = j.at("prompt").get<Prompt>();
    if (j.contains("initial_condition")) {
      const auto& ic = j.at("initial_condition");
      if (ic.is_null()) {
        c.initial_condition.reset();
      } else {
        c.initial_condition = ic.get<Condition>();
      }
    }
    if (j.contains("critic")) {
      const auto& s = j.at("critic");
      reject_unknown(s, {"kind", "endpoint", "rounds", "image_size", "structured_cond", "timeout_ms"}, "critic");
      if (s.contains("kind")) c.critic.kind = parse_critic_kind(s.at("kind").get<std::string>());
      if (s.contains("endpoint")) c.critic.endpoint = s.at("endpoint").get<std::string>();
      if (s.contains("rounds")) c.critic.rounds = parse_round_mode(s.at("rounds").get<std::string>());
      if (s.contains("image_size")) c.critic.image_size = s.at("image_size").get<int>();
      if (s.contains("structured_cond")) c.critic.structured_cond = s.at("structured_cond").get<bool>();
      if (s.contains("timeout_ms")) c.critic.timeout_ms = s.at("timeout_ms").get<int>();
    }
    if (j.contains("denoiser")) {
      const auto& s = j.at("denoiser");
      reject_unknown(s, {"kind", "endpoint", "timeout_ms"}, "denoiser");
      if (s.contains("kind")) c.denoiser.kind = parse_denoiser_kind(s.at("kind").get<std::string>());
      if (s.contains("endpoint")) c.denoiser.endpoint = s.at("endpoint").get<std::string>();
      if (s.contains("timeout_ms")) c.denoiser.timeout_ms = s.at("timeout_ms").get<int>();
    }
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), j.dump());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RangeError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), ss.str());
  }
  RunConfig c = benchmark_config();
  merge_json(j, c);
  return c;
}

void apply_environment(RunConfig& c) {
  if (const char* v = std::getenv("PINGPONG_CRITIC_ENDPOINT"); v && *v) c.critic.endpoint = v;
  if (const char* v = std::getenv("PINGPONG_DENOISER_ENDPOINT"); v && *v) c.denoiser.endpoint = v;
  if (const char* v = std::getenv("PINGPONG_WORKERS"); v && *v) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 0) throw RangeError("PINGPONG_WORKERS: expected a non-negative integer");
    c.workers = static_cast<int>(n);
  }
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Engine::Engine(RunConfig config) : config_(config.resolved()), condition_(config_.condition()) {
  const auto& sc = config_.schedule;
  schedule_ = std::make_shared<const NoiseSchedule>(build_schedule(sc.kind, sc.steps, sc.beta_start, sc.beta_end));
  if (config_.denoiser.kind == DenoiserKind::kAnalytic) {
    denoiser_ = std::make_shared<const AnalyticDenoiser>(config_.world, schedule_, config_.sampler.lambda);
  } else {
    denoiser_ = remote_eps(config_.denoiser.endpoint, schedule_,
                           std::chrono::milliseconds(config_.denoiser.timeout_ms));
  }
}

std::unique_ptr<Critic> Engine::make_critic() const {
  switch (config_.critic.kind) {
    case CriticKind::kOracle:
      return std::make_unique<OracleCritic>(config_.world, config_.sampler.kappa);
    case CriticKind::kConsistent:
      return std::make_unique<ConsistentCritic>();
    case CriticKind::kMllm: {
      MllmCriticOptions o;
      o.endpoint = config_.critic.endpoint;
      o.rounds = config_.critic.rounds;
      o.tau_stop = config_.sampler.tau_stop;
      o.image_size = config_.critic.image_size;
      o.structured_cond = config_.critic.structured_cond;
      o.timeout = std::chrono::milliseconds(config_.critic.timeout_ms);
      return std::make_unique<MllmCritic>(o, config_.world);
    }
  }
  return nullptr;
}

SamplingContext Engine::context(Method method, std::uint64_t seed) const {
  SamplingContext ctx;
  ctx.config = config_.sampler;
  ctx.config.method = method;
  ctx.config.seed = seed;
  ctx.prompt = config_.prompt;
  ctx.condition = condition_;
  ctx.schedule = schedule_.get();
  ctx.denoiser = denoiser_.get();
  ctx.dims = config_.world.dims();
  ctx.provenance = config_;
  return ctx;
}

SampleResult Engine::run(Method method, std::uint64_t seed) const {
  SamplingContext ctx = context(method, seed);
  auto critic = make_critic();
  return sample(ctx, critic.get());
}

SampleResult Engine::run(const SamplerConfig& sampler) const {
  SamplingContext ctx = context(sampler.method, sampler.seed);
  ctx.config = sampler.resolved(schedule_->steps());
  auto critic = make_critic();
  return sample(ctx, critic.get());
}

}  // namespace pingpong
