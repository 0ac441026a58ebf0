// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pingpong/config.hpp"
#include "pingpong/denoiser.hpp"
#include "pingpong/latent.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

struct TheoremTrial {
  int index = 0;
  int t = 0;              // decomposition: step of the composite
  double residual = 0.0;  // decomposition: max |composite - eta sum|
  double e0 = 0.0;        // bound: max per-point final error
  int recursion_violations = 0;
  double worst_recursion_slack = 0.0;  // min over steps of rhs - lhs
  bool pass = false;
};

struct TheoremReport {
  int theorem = 0;
  std::string label;
  int trials = 0;
  double tolerance = 0.0;
  double max_residual = 0.0;
  double max_e0 = 0.0;
  double bound = 0.0;  // delta * sum gamma_t
  double margin = 0.0;  // bound - max_e0
  bool bound_ok = true;
  bool recursion_ok = true;
  bool gamma_ok = true;
  bool pass = false;
  nlohmann::json params;
  std::vector<TheoremTrial> details;
};

void to_json(nlohmann::json& j, const TheoremTrial& t);
/// Summary fields plus per-trial details when with_details is set.
nlohmann::json report_json(const TheoremReport& r, bool with_details = false);

struct Theorem2Options {
  int trials = 1000;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::size_t batch = 8;
  bool zero_noise = false;
  double lambda = 1.0;
  int workers = 1;
};

/// Composite ping -> pong -> ahead versus the four-term eta decomposition.
TheoremReport verify_theorem2(std::shared_ptr<const NoiseSchedule> s, const GMMWorld& world,
                              const Theorem2Options& o);

struct Theorem1Options {
  double delta = 0.1;
  PerturbationMode mode = PerturbationMode::kConstantDirection;
  int trials = 100;
  std::uint64_t seed = 0;
  std::size_t batch = 64;
  double snr_floor = 0.0;  // 0: the schedule's own minimum, which must be > 0
  double lambda = 1.0;
  int workers = 1;
};

/// Paired ideal / perturbed reverse chains from identical x_T. Checks the
/// final-error bound, the per-step recursion and gamma_t <= sqrt(1/SNR_min).
/// ContractError naming t when the schedule breaks the SNR floor.
TheoremReport verify_theorem1(std::shared_ptr<const NoiseSchedule> s, const GMMWorld& world, const Condition& cond,
                              const Theorem1Options& o);

/// Relative slack allowed on the per-step recursion for rounding.
inline constexpr double kRecursionSlack = 1e-12;

/// Mean over points of the squared residual norm.
double sft_loss(const Points& eps_true, const Points& eps_pred);
/// -log softmax of the positive score, evaluated as softplus(s_neg - s_pos).
double dpo_loss(double score_pos, double score_neg);
/// Derivative of dpo_loss with respect to score_pos.
double dpo_loss_grad_pos(double score_pos, double score_neg);

struct FractionRow {
  int component = 0;
  std::string role;  // "required" or "forbidden"
  double target = 0.0;
  double observed = 0.0;
  bool pass = false;
};

struct AlignmentMetrics {
  int success = 0;
  std::vector<double> coverage;
  std::vector<FractionRow> fractions;
};

AlignmentMetrics alignment_metrics(const LatentState& final, const Prompt& p, const GMMWorld& world);
void to_json(nlohmann::json& j, const AlignmentMetrics& m);

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first error.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct CompareRow {
  Method method = Method::kVanilla;
  std::uint64_t seed = 0;
  AlignmentMetrics metrics;
  int corrections = 0;
  int fallbacks = 0;
  std::uint64_t digest = 0;
};

/// `runs` seeded runs (seeds first_seed..) for each method.
std::vector<CompareRow> compare(const Engine& engine, const std::vector<Method>& methods, int runs,
                                std::uint64_t first_seed, int workers);
double success_rate(const std::vector<CompareRow>& rows, Method method);
std::string compare_csv(const std::vector<CompareRow>& rows, std::size_t components);

struct AblationRow {
  std::string name;
  bool critic = false;
  bool lookahead = false;
  bool ppa = false;
  int successes = 0;
  int runs = 0;
  double success_rate = 0.0;
};

/// Module lattice: none, sck-only, sck+lkg, full. Same seeds for every row.
std::vector<AblationRow> ablation_harness(const Engine& engine, int runs, std::uint64_t first_seed, int workers);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace pingpong
