// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pingpong/denoiser.hpp"
#include "pingpong/latent.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

struct Sketch {
  LatentState x0;        // clean-sample estimate, tagged t = 0
  int depth = 1;         // SNR-gated step count k in {1, 2}
  bool clamped = false;  // k reduced because the rollout would pass t = 1
  int model_calls = 0;
};

/// SNR-gated lookahead sketch from the current state x_t.
///
/// k = lookahead_steps(s, t, gamma). The rollout reads the model at x_{t-k+1}:
/// k-1 deterministic reverse steps followed by the clean-sample estimate at the
/// reached state, so a sketch costs exactly k model calls. No randomness is
/// consumed.
Sketch preview(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
               double gamma);

/// Sketch with a fixed depth (depth 1 is the raw one-step estimate).
Sketch preview_fixed(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
                     int depth);

}  // namespace pingpong
