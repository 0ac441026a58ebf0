// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pingpong {

struct RequiredComponent {
  int id = 0;
  double fraction = 0.0;
  bool operator==(const RequiredComponent&) const = default;
};

/// Desk-scale prompt: which mixture components must appear, at what share, and
/// which must not appear at all.
struct Prompt {
  std::vector<RequiredComponent> required;
  std::vector<int> forbidden;
  double tolerance = 0.15;
  std::optional<std::string> text;

  /// Throws RangeError/IndexError describing the first violated invariant.
  void validate(std::size_t components) const;
  std::optional<double> target(int id) const;
  bool is_forbidden(int id) const;

  bool operator==(const Prompt&) const = default;
};

/// Encoded condition: a mixture-weight simplex plus a per-component suppression mask.
struct Condition {
  std::vector<double> weights;
  std::vector<double> suppress;

  std::size_t components() const { return weights.size(); }
  void validate() const;

  bool operator==(const Condition&) const = default;
};

/// Renormalizes non-negative values to sum to 1; EmptySupportError if all zero.
std::vector<double> normalize_weights(std::vector<double> w, const char* what);

Condition encode(const Prompt& p, std::size_t components);

/// Merges a refined condition with omission highlights:
/// weights = normalize(max(0, refined.weights - lambda * omissions.suppress)),
/// suppress = elementwise max of both suppress vectors.
Condition compose(const Condition& refined, const Condition& omissions, double lambda);

/// Mixture weights the denoiser actually uses: normalize(max(0, w - lambda * u)).
std::vector<double> effective_weights(const Condition& c, double lambda);

void to_json(nlohmann::json& j, const Prompt& p);
void from_json(const nlohmann::json& j, Prompt& p);
void to_json(nlohmann::json& j, const Condition& c);
void from_json(const nlohmann::json& j, Condition& c);

}  // namespace pingpong
