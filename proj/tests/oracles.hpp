// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "pingpong/denoiser.hpp"

namespace pingpong::testing {

struct McEstimate {
  std::vector<double> mean;
  std::vector<double> se;
};

/// Self-normalized importance sampling of E[x0 | x_t] with prior proposals.
inline McEstimate mc_posterior_mean(const GMMWorld& w, const std::vector<double>& weights, std::span<const double> xt,
                                     double ab, std::size_t draws, std::mt19937_64& gen) {
  const std::size_t D = w.dims();
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> n01;
  std::vector<double> x0s(draws * D), logw(draws);
  double max_logw = -INFINITY;
  for (std::size_t i = 0; i < draws; ++i) {
    const int k = pick(gen);
    double sq = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double v = w.means.at(k, d) + w.scales[k] * n01(gen);
      x0s[i * D + d] = v;
      const double r = xt[d] - std::sqrt(ab) * v;
      sq += r * r;
    }
    logw[i] = -0.5 * sq / (1.0 - ab);
    max_logw = std::max(max_logw, logw[i]);
  }
  double sum_w = 0.0;
  std::vector<double> acc(D, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    logw[i] = std::exp(logw[i] - max_logw);
    sum_w += logw[i];
    for (std::size_t d = 0; d < D; ++d) acc[d] += logw[i] * x0s[i * D + d];
  }
  McEstimate out{std::vector<double>(D), std::vector<double>(D, 0.0)};
  for (std::size_t d = 0; d < D; ++d) out.mean[d] = acc[d] / sum_w;
  for (std::size_t i = 0; i < draws; ++i) {
    const double wi = logw[i] / sum_w;
    for (std::size_t d = 0; d < D; ++d) out.se[d] += wi * wi * std::pow(x0s[i * D + d] - out.mean[d], 2);
  }
  for (double& v : out.se) v = std::sqrt(v);
  return out;
}


}  // namespace pingpong::testing
