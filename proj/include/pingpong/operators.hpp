// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pingpong/denoiser.hpp"
#include "pingpong/latent.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

/// One forward noising step t-1 -> t: sqrt(alpha_t) x + sqrt(1 - alpha_t) eps.
LatentState forward_step(const LatentState& x, const NoiseSchedule& s, const NoiseDraw& noise);

/// Clean-sample estimate (x_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t), tagged t = 0.
LatentState predict_x0(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s);

/// Deterministic DDIM step t -> t-1 given a noise estimate, written as
/// sqrt(ab_{t-1}) x0_hat + sqrt(1 - ab_{t-1}) eps_hat.
LatentState ddim_from_x0(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s);

/// The same step in coefficient form:
/// sqrt(ab_{t-1}/ab_t) x + (sqrt(1 - ab_{t-1}) - sqrt(ab_{t-1}(1 - ab_t)/ab_t)) eps_hat.
LatentState ddim_coefficient_form(const LatentState& x, const Points& eps_hat, const NoiseSchedule& s);

/// Reverse step t -> t-1 with eps_hat = den(x, cond).
LatentState reverse_step(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s);

/// Back-step t-1 -> t: sqrt(ab_t/ab_{t-1}) x + sqrt(1 - ab_t) eps.
LatentState ping(const LatentState& x, const NoiseSchedule& s, const NoiseDraw& noise);

/// Reverse step t -> t-1 under the corrected condition.
LatentState pong(const LatentState& x_tilde, const Condition& corrected, const Denoiser& den, const NoiseSchedule& s);

/// Reverse step t-1 -> t-2 under the original condition; requires x_tilde.t >= 2.
LatentState ahead(const LatentState& x_tilde, const Condition& cond, const Denoiser& den, const NoiseSchedule& s);

/// Back-step with fresh noise followed by a reverse step under the same condition.
LatentState zigzag_step(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
                        const NoiseDraw& noise);

// Alternative noise placement: a deterministic DDIM inversion for the back-step
// and an ancestral reverse step (fresh noise scaled by sigma_t) for the pong.

/// DDIM inversion t-1 -> t using eps_hat = den(x, cond) at t-1; requires x.t >= 1.
LatentState ping_deterministic(const LatentState& x, const Condition& cond, const Denoiser& den,
                               const NoiseSchedule& s);
/// sqrt(ab_{t-1}) x0_hat + sqrt(1 - ab_{t-1} - sigma_t^2) eps_hat + sigma_t z.
LatentState pong_stochastic(const LatentState& x_tilde, const Condition& corrected, const Denoiser& den,
                            const NoiseSchedule& s, const NoiseDraw& noise);

}  // namespace pingpong
