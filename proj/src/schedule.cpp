// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pingpong/errors.hpp"

namespace pingpong {

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "linear") return ScheduleKind::kLinear;
  throw RangeError("schedule kind: unknown value '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kLinear:
      return "linear";
  }
  return "linear";
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas, ScheduleKind kind) : kind_(kind), beta_(std::move(betas)) {
  const int T = steps();
  if (T < 1) throw RangeError("T: schedule needs at least one step");
  for (int i = 0; i < T; ++i) {
    if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) {
      throw RangeError("beta: value at t=" + std::to_string(i + 1) + " is outside (0,1)");
    }
  }

  alpha_.resize(T);
  alpha_bar_.resize(T + 1);
  sigma_.resize(T);
  snr_.resize(T);
  alpha_bar_[0] = 1.0;
  for (int i = 0; i < T; ++i) {
    alpha_[i] = 1.0 - beta_[i];
    alpha_bar_[i + 1] = alpha_bar_[i] * alpha_[i];
  }
  for (int t = 1; t <= T; ++t) {
    const double ab = alpha_bar_[t];
    const double ab_prev = alpha_bar_[t - 1];
    sigma_[t - 1] = std::sqrt(beta_[t - 1] * (1.0 - ab_prev) / (1.0 - ab));
    snr_[t - 1] = ab / (1.0 - ab);
  }
  min_snr_ = *std::min_element(snr_.begin(), snr_.end());

  gamma_.resize(T);
  for (int t = 1; t <= T; ++t) {
    const double ab = alpha_bar_[t];
    const double ab_prev = alpha_bar_[t - 1];
    gamma_[t - 1] = std::abs(std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev * (1.0 - ab) / ab));
  }

  eta_.assign(T, EtaCoeffs{0.0, 0.0, 0.0, 0.0});
  for (int t = 3; t <= T; ++t) {
    const double a2 = alpha_bar_[t - 2];
    const double a1 = alpha_bar_[t - 1];
    const double a0 = alpha_bar_[t];
    const double mid = std::sqrt(a2 * (1.0 - a1) / a1);
    const double far = std::sqrt(a2 * (1.0 - a0) / a0);
    eta_[t - 1] = EtaCoeffs{std::sqrt(a2 / a1), std::sqrt(1.0 - a2) - mid, mid - far, far};
  }
}

void NoiseSchedule::check_step(int t, int lo, const char* what) const {
  if (t < lo || t > steps()) {
    throw IndexError(std::string(what) + ": t=" + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(steps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t, 1, "beta");
  return beta_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t, 1, "alpha");
  return alpha_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t, 0, "alpha_bar");
  return alpha_bar_[t];
}

double NoiseSchedule::sigma(int t) const {
  check_step(t, 1, "sigma");
  return sigma_[t - 1];
}

double NoiseSchedule::snr(int t) const {
  check_step(t, 1, "snr");
  return snr_[t - 1];
}

double NoiseSchedule::gamma(int t) const {
  check_step(t, 1, "gamma");
  return gamma_[t - 1];
}

EtaCoeffs NoiseSchedule::eta(int t) const {
  check_step(t, 3, "eta");
  return eta_[t - 1];
}

int NoiseSchedule::lookahead_steps(int t, double snr_threshold) const {
  check_step(t, 1, "lookahead_steps");
  if (!(snr_threshold > 0.0)) throw RangeError("gamma: SNR threshold must be > 0");
  return snr_[t - 1] > snr_threshold ? 1 : 2;
}

NoiseSchedule build_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end) {
  if (steps < 2) throw RangeError("T: must be >= 2, got " + std::to_string(steps));
  if (!(beta_start > 0.0)) throw RangeError("beta_start: must be > 0");
  if (!(beta_end < 1.0)) throw RangeError("beta_end: must be < 1");
  if (!(beta_start <= beta_end)) throw RangeError("beta_start: must not exceed beta_end");

  std::vector<double> betas(steps);
  switch (kind) {
    case ScheduleKind::kLinear:
      for (int i = 0; i < steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
        betas[i] = beta_start + (beta_end - beta_start) * frac;
      }
      betas.back() = beta_end;
      break;
  }
  return NoiseSchedule(std::move(betas), kind);
}

double gamma_coeff(const NoiseSchedule& s, int t) { return s.gamma(t); }
EtaCoeffs eta_coeffs(const NoiseSchedule& s, int t) { return s.eta(t); }
int lookahead_steps(const NoiseSchedule& s, int t, double snr_threshold) { return s.lookahead_steps(t, snr_threshold); }

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string schedule_csv(const NoiseSchedule& s) {
  std::ostringstream out;
  out << "t,beta,alpha,alpha_bar,sigma,snr,gamma,eta1,eta2,eta3,eta4\n";
  for (int t = 1; t <= s.steps(); ++t) {
    out << t << ',' << fmt_double(s.beta(t)) << ',' << fmt_double(s.alpha(t)) << ',' << fmt_double(s.alpha_bar(t))
        << ',' << fmt_double(s.sigma(t)) << ',' << fmt_double(s.snr(t)) << ',' << fmt_double(s.gamma(t));
    if (t >= 3) {
      const EtaCoeffs e = s.eta(t);
      out << ',' << fmt_double(e.eta1) << ',' << fmt_double(e.eta2) << ',' << fmt_double(e.eta3) << ','
          << fmt_double(e.eta4);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace pingpong
