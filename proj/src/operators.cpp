// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/operators.hpp"

#include <cmath>

#include "pingpong/errors.hpp"

namespace pingpong {

namespace {

void require_shape(const Points& a, const Points& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": noise shape does not match latent");
}

void require_finite(const Points& eps, int t, const char* what) {
  if (!eps.all_finite()) throw NumericError(std::string(what) + ": non-finite noise estimate", t);
}

void require_reversible(const LatentState& x, const NoiseSchedule& s, const char* what) {
  if (x.t < 1) throw StepError(std::string(what) + ": cannot step below t=0");
  if (x.t > s.steps()) throw IndexError(std::string(what) + ": t=" + std::to_string(x.t) + " beyond schedule");
}

}  // namespace

LatentState forward_step(const LatentState& x, const NoiseSchedule& s, const NoiseDraw& noise) {
  require_shape(x.x, noise.eps, "forward_step");
  const int t = x.t + 1;
  if (x.t < 0 || t > s.steps()) throw IndexError("forward_step: t=" + std::to_string(t) + " outside schedule");
  const double a = s.alpha(t);
  return {axpby(std::sqrt(a), x.x, std::sqrt(1.0 - a), noise.eps), t};
}

LatentState predict_x0(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s) {
  require_shape(x.x, eps_hat, "predict_x0");
  if (x.t < 1) throw StepError("predict_x0: requires t >= 1");
  const double ab = s.alpha_bar(x.t);
  if (ab < 1e-12) throw NumericError("predict_x0: alpha_bar below 1e-12, division is ill-conditioned", x.t);
  const double inv = 1.0 / std::sqrt(ab);
  return {axpby(inv, x.x, -std::sqrt(1.0 - ab) * inv, eps_hat), 0};
}

LatentState ddim_from_x0(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s) {
  require_reversible(x, s, "reverse_step");
  require_shape(x.x, eps_hat, "reverse_step");
  require_finite(eps_hat, x.t, "reverse_step");
  const LatentState x0 = predict_x0(x, eps_hat, s);
  const double ab_prev = s.alpha_bar(x.t - 1);
  return {axpby(std::sqrt(ab_prev), x0.x, std::sqrt(1.0 - ab_prev), eps_hat), x.t - 1};
}

LatentState ddim_coefficient_form(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s) {
  require_reversible(x, s, "reverse_step");
  require_shape(x.x, eps_hat, "reverse_step");
  require_finite(eps_hat, x.t, "reverse_step");
  const double ab = s.alpha_bar(x.t);
  const double ab_prev = s.alpha_bar(x.t - 1);
  const double scale = std::sqrt(ab_prev / ab);
  const double coeff = std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev * (1.0 - ab) / ab);
  return {axpby(scale, x.x, coeff, eps_hat), x.t - 1};
}

LatentState reverse_step(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s) {
  require_reversible(x, s, "reverse_step");
  const Points eps = den.predict(x, cond);
  return ddim_from_x0(x, eps, s);
}

LatentState ping(const LatentState& x, const NoiseSchedule& s, const NoiseDraw& noise) {
  require_shape(x.x, noise.eps, "ping");
  const int t = x.t + 1;
  if (t < 1 || t > s.steps()) throw IndexError("ping: target t=" + std::to_string(t) + " outside [1, T]");
  const double ab = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar(t - 1);
  return {axpby(std::sqrt(ab / ab_prev), x.x, std::sqrt(1.0 - ab), noise.eps), t};
}

LatentState pong(const LatentState& x_tilde, const Condition& corrected, const Denoiser& den,
                 const NoiseSchedule& s) {
  return reverse_step(x_tilde, corrected, den, s);
}

LatentState ahead(const LatentState& x_tilde, const Condition& cond, const Denoiser& den, const NoiseSchedule& s) {
  if (x_tilde.t < 2) {
    throw StepError("ahead: needs x_tilde at t >= 2, got t=" + std::to_string(x_tilde.t));
  }
  return reverse_step(x_tilde, cond, den, s);
}

LatentState zigzag_step(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
                        const NoiseDraw& noise) {
  return pong(ping(x, s, noise), cond, den, s);
}

LatentState ping_deterministic(const LatentState& x, const Condition& cond, const Denoiser& den,
                               const NoiseSchedule& s) {
  if (x.t < 1) throw StepError("ping: deterministic inversion needs t >= 1");
  const int t = x.t + 1;
  if (t > s.steps()) throw IndexError("ping: target t=" + std::to_string(t) + " outside [1, T]");
  const Points eps = den.predict(x, cond);
  require_finite(eps, x.t, "ping");
  const LatentState x0 = predict_x0(x, eps, s);
  const double ab = s.alpha_bar(t);
  return {axpby(std::sqrt(ab), x0.x, std::sqrt(1.0 - ab), eps), t};
}

LatentState pong_stochastic(const LatentState& x_tilde, const Condition& corrected, const Denoiser& den,
                            const NoiseSchedule& s, const NoiseDraw& noise) {
  require_reversible(x_tilde, s, "pong");
  require_shape(x_tilde.x, noise.eps, "pong");
  const Points eps = den.predict(x_tilde, corrected);
  require_finite(eps, x_tilde.t, "pong");
  const LatentState x0 = predict_x0(x_tilde, eps, s);
  const double ab_prev = s.alpha_bar(x_tilde.t - 1);
  const double sigma = s.sigma(x_tilde.t);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
  LatentState out{axpby(std::sqrt(ab_prev), x0.x, dir, eps), x_tilde.t - 1};
  out.x = axpby(1.0, out.x, sigma, noise.eps);
  return out;
}

}  // namespace pingpong
