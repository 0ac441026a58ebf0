// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "pingpong/critic.hpp"
#include "pingpong/denoiser.hpp"
#include "pingpong/sampler.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kLinear;
  int steps = 50;
  // 1e-4..0.02 rescaled by 1000/T so that alpha_bar(T) is close to zero at T=50.
  double beta_start = 0.002;
  double beta_end = 0.4;
};

enum class CriticKind { kOracle, kConsistent, kMllm };
CriticKind parse_critic_kind(const std::string& name);
std::string to_string(CriticKind kind);

struct CriticConfig {
  CriticKind kind = CriticKind::kOracle;
  std::string endpoint;
  RoundMode rounds = RoundMode::k2r;
  int image_size = 128;
  bool structured_cond = false;
  int timeout_ms = 10000;
};

enum class DenoiserKind { kAnalytic, kRemote };
DenoiserKind parse_denoiser_kind(const std::string& name);
std::string to_string(DenoiserKind kind);

struct DenoiserConfig {
  DenoiserKind kind = DenoiserKind::kAnalytic;
  std::string endpoint;
  int timeout_ms = 5000;
};

/// Everything a run needs. The defaults are the mis-conditioned benchmark.
struct RunConfig {
  ScheduleConfig schedule;
  SamplerConfig sampler;
  GMMWorld world;
  Prompt prompt;
  std::optional<Condition> initial_condition;  // absent: encode(prompt)
  CriticConfig critic;
  DenoiserConfig denoiser;
  int workers = 0;  // 0: hardware concurrency

  /// Validates every section and fills derived sampler fields.
  RunConfig resolved() const;
  Condition condition() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Overlays the keys present in j onto c (absent keys keep their values).
void merge_json(const nlohmann::json& j, RunConfig& c);

/// Five components on a circle of radius 3, required {0:0.4, 1:0.3, 2:0.3},
/// initial condition with component 2 zeroed.
RunConfig benchmark_config();
/// Same world and prompt with the correctly encoded condition.
RunConfig calibration_config();

/// Default config overlaid by a JSON file. ParseError / RangeError on bad input.
RunConfig load_config(const std::string& path);
/// Applies PINGPONG_CRITIC_ENDPOINT, PINGPONG_DENOISER_ENDPOINT, PINGPONG_WORKERS.
void apply_environment(RunConfig& c);
int resolve_workers(int requested);

/// Shared, immutable pieces built once from a config; hands out per-run critics.
class Engine {
 public:
  explicit Engine(RunConfig config);

  const RunConfig& config() const { return config_; }
  std::shared_ptr<const NoiseSchedule> schedule() const { return schedule_; }
  std::shared_ptr<const Denoiser> denoiser() const { return denoiser_; }

  std::unique_ptr<Critic> make_critic() const;
  SamplingContext context(Method method, std::uint64_t seed) const;
  SampleResult run(Method method, std::uint64_t seed) const;
  SampleResult run(const SamplerConfig& sampler) const;

 private:
  RunConfig config_;
  Condition condition_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  std::shared_ptr<const Denoiser> denoiser_;
};

}  // namespace pingpong
