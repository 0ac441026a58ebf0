// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pingpong/critic.hpp"
#include "pingpong/denoiser.hpp"
#include "pingpong/errors.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"
#include "pingpong/trace.hpp"

namespace pingpong {

inline constexpr const char* kVersion = "0.3.0";

enum class Method { kVanilla, kZigzag, kPpad };
/// How a corrected condition enters the trajectory.
enum class Injection {
  kPingPongAhead,  // back-step, corrected reverse step, then an original-condition step
  kNextStep,       // corrected condition used for the next regular step only
};
/// Which leg of the back-and-forth carries fresh noise.
enum class NoisePlacement {
  kPing,  // stochastic back-step, deterministic DDIM pong (default)
  kPong,  // deterministic DDIM inversion, ancestral pong with sigma_t noise
};

Method parse_method(const std::string& name);
std::string to_string(Method m);
Injection parse_injection(const std::string& name);
std::string to_string(Injection i);
NoisePlacement parse_noise_placement(const std::string& name);
std::string to_string(NoisePlacement p);

struct SamplerConfig {
  Method method = Method::kPpad;
  int t_hi = 0;  // 0 derives round(0.8 T)
  int t_lo = 0;  // 0 derives round(0.2 T)
  int stride = 5;
  double gamma = 1.0;
  double tau_stop = 0.5;
  double lambda = 1.0;
  double kappa = 1.0;
  std::uint64_t seed = 0;
  std::size_t batch = 64;
  bool lookahead = true;
  Injection injection = Injection::kPingPongAhead;
  bool persist_correction = true;
  NoisePlacement noise_placement = NoisePlacement::kPing;
  double ping_noise_scale = 1.0;

  /// Copy with derived interval bounds filled in; throws RangeError when invalid.
  SamplerConfig resolved(int steps) const;
  /// Correction timesteps t_hi, t_hi - stride, ... >= t_lo (requires resolved()).
  std::vector<int> checkpoints() const;
};

void to_json(nlohmann::json& j, const SamplerConfig& c);
void from_json(const nlohmann::json& j, SamplerConfig& c);

/// Everything one run needs besides the critic.
struct SamplingContext {
  SamplerConfig config;
  Prompt prompt;
  Condition condition;  // initial condition, usually encode(prompt)
  const NoiseSchedule* schedule = nullptr;
  const Denoiser* denoiser = nullptr;
  std::size_t dims = 2;
  nlohmann::json provenance;  // copied into the trace header
};

struct SampleResult {
  LatentState final;
  RunTrace trace;
};

/// Raised when the trajectory cannot continue; carries the trace so far.
class SamplingAborted : public Error {
 public:
  SamplingAborted(const std::string& what, RunTrace partial) : Error(what), partial_(std::move(partial)) {}
  const RunTrace& partial() const { return partial_; }

 private:
  RunTrace partial_;
};

/// x_T ~ N(0, I) from the initial-noise stream of the seed.
LatentState initial_latent(std::uint64_t seed, std::size_t rows, std::size_t dims, int steps);

SampleResult sample_vanilla(const SamplingContext& ctx);
SampleResult sample_zigzag(const SamplingContext& ctx);
SampleResult sample_ppad(const SamplingContext& ctx, Critic& critic);
/// Dispatches on ctx.config.method; the critic is used only by ppad.
SampleResult sample(const SamplingContext& ctx, Critic* critic);

}  // namespace pingpong
