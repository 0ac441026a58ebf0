// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace pingpong {

enum class ScheduleKind { kLinear };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

struct EtaCoeffs {
  double eta1;  // weight on the input latent
  double eta2;  // weight on the prediction at the pong output
  double eta3;  // weight on the prediction under the corrected condition
  double eta4;  // weight on the ping noise
};

/// Discrete-time variance schedule with every derived coefficient precomputed.
///
/// Timesteps run 1..T. alpha_bar is stored for 0..T with alpha_bar(0) == 1 so
/// that expressions involving t-1 and t-2 index without shifts.
class NoiseSchedule {
 public:
  /// Builds a schedule directly from per-step betas (beta[0] is step 1).
  explicit NoiseSchedule(std::vector<double> betas, ScheduleKind kind = ScheduleKind::kLinear);

  int steps() const { return static_cast<int>(beta_.size()); }
  ScheduleKind kind() const { return kind_; }

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;  // valid for 0..T
  double sigma(int t) const;
  double snr(int t) const;
  double min_snr() const { return min_snr_; }

  /// Error-growth coefficient |sqrt(1-ab[t-1]) - sqrt(ab[t-1](1-ab[t])/ab[t])|, t in 1..T.
  double gamma(int t) const;
  /// Decomposition coefficients of the ping/pong/ahead composite, t in 3..T.
  EtaCoeffs eta(int t) const;

  /// Step count of the lookahead rollout: 1 when SNR(t) > threshold, else 2.
  int lookahead_steps(int t, double snr_threshold) const;

 private:
  void check_step(int t, int lo, const char* what) const;

  ScheduleKind kind_;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;  // size T+1
  std::vector<double> sigma_;
  std::vector<double> snr_;
  std::vector<double> gamma_;
  std::vector<EtaCoeffs> eta_;  // index t-1; entries for t<3 unused
  double min_snr_ = 0.0;
};

NoiseSchedule build_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end);

double gamma_coeff(const NoiseSchedule& s, int t);
EtaCoeffs eta_coeffs(const NoiseSchedule& s, int t);
int lookahead_steps(const NoiseSchedule& s, int t, double snr_threshold);

/// Coefficient CSV: t, beta, alpha, alpha_bar, sigma, snr, gamma, eta1..eta4.
std::string schedule_csv(const NoiseSchedule& s);

}  // namespace pingpong
