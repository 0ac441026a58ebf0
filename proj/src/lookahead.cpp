// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/lookahead.hpp"

#include "pingpong/errors.hpp"
#include "pingpong/operators.hpp"

namespace pingpong {

Sketch preview_fixed(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
                     int depth) {
  if (x.t < 1) throw StepError("preview: needs t >= 1");
  if (depth < 1 || depth > 2) throw RangeError("preview: depth must be 1 or 2");
  Sketch out;
  out.depth = depth;
  if (x.t - (depth - 1) < 1) {
    out.depth = x.t;
    out.clamped = true;
  }
  LatentState cur = x;
  for (int i = 0; i + 1 < out.depth; ++i) {
    cur = reverse_step(cur, cond, den, s);
    ++out.model_calls;
  }
  const Points eps = den.predict(cur, cond);
  ++out.model_calls;
  if (!eps.all_finite()) throw NumericError("preview: non-finite noise estimate", cur.t);
  out.x0 = predict_x0(cur, eps, s);
  return out;
}

Sketch preview(const LatentState& x, const Condition& cond, const Denoiser& den, const NoiseSchedule& s,
               double gamma) {
  return preview_fixed(x, cond, den, s, s.lookahead_steps(x.t, gamma));
}

}  // namespace pingpong
