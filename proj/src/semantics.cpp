// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pingpong/errors.hpp"

namespace pingpong {

void Prompt::validate(std::size_t components) const {
  if (!(tolerance >= 0.0 && tolerance <= 1.0)) throw RangeError("tolerance: must lie in [0,1]");
  double total = 0.0;
  for (const auto& r : required) {
    if (r.id < 0 || static_cast<std::size_t>(r.id) >= components) {
      throw IndexError("required: component id " + std::to_string(r.id) + " out of range");
    }
    if (!(r.fraction >= 0.0 && r.fraction <= 1.0)) {
      throw RangeError("required: fraction of component " + std::to_string(r.id) + " outside [0,1]");
    }
    total += r.fraction;
  }
  if (total > 1.0 + tolerance + 1e-12) throw RangeError("required: fractions sum above 1 + tolerance");
  for (int f : forbidden) {
    if (f < 0 || static_cast<std::size_t>(f) >= components) {
      throw IndexError("forbidden: component id " + std::to_string(f) + " out of range");
    }
    if (target(f)) throw RangeError("forbidden: component " + std::to_string(f) + " is also required");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    for (std::size_t j = i + 1; j < required.size(); ++j) {
      if (required[i].id == required[j].id) {
        throw RangeError("required: component " + std::to_string(required[i].id) + " listed twice");
      }
    }
  }
}

std::optional<double> Prompt::target(int id) const {
  for (const auto& r : required) {
    if (r.id == id) return r.fraction;
  }
  return std::nullopt;
}

bool Prompt::is_forbidden(int id) const { return std::find(forbidden.begin(), forbidden.end(), id) != forbidden.end(); }

void Condition::validate() const {
  if (weights.size() != suppress.size()) throw ShapeError("condition: weights and suppress lengths differ");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw RangeError("weights: entries must be finite and non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw RangeError("weights: must sum to 1");
  for (double u : suppress) {
    if (!(u >= 0.0 && u <= 1.0)) throw RangeError("suppress: entries must lie in [0,1]");
  }
}

std::vector<double> normalize_weights(std::vector<double> w, const char* what) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(sum > 0.0)) throw EmptySupportError(std::string(what) + ": every weight is zero");
  for (double& v : w) v /= sum;
  return w;
}

Condition encode(const Prompt& p, std::size_t components) {
  p.validate(components);
  if (p.required.empty()) throw EmptySupportError("encode: prompt has no required components");
  Condition c{std::vector<double>(components, 0.0), std::vector<double>(components, 0.0)};
  for (const auto& r : p.required) c.weights[r.id] = r.fraction;
  for (int f : p.forbidden) c.suppress[f] = 1.0;
  c.weights = normalize_weights(std::move(c.weights), "encode");
  return c;
}

Condition compose(const Condition& refined, const Condition& omissions, double lambda) {
  if (refined.components() != omissions.components() || refined.suppress.size() != omissions.suppress.size()) {
    throw ShapeError("compose: conditions have different component counts");
  }
  if (!(lambda >= 0.0)) throw RangeError("lambda: must be >= 0");
  const std::size_t K = refined.components();
  Condition out{std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t k = 0; k < K; ++k) {
    out.weights[k] = std::max(0.0, refined.weights[k] - lambda * omissions.suppress[k]);
    out.suppress[k] = std::max(refined.suppress[k], omissions.suppress[k]);
  }
  out.weights = normalize_weights(std::move(out.weights), "compose");
  return out;
}

std::vector<double> effective_weights(const Condition& c, double lambda) {
  std::vector<double> w(c.components());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::max(0.0, c.weights[k] - lambda * c.suppress[k]);
  return normalize_weights(std::move(w), "effective weights");
}

void to_json(nlohmann::json& j, const Prompt& p) {
  j = nlohmann::json::object();
  j["required"] = nlohmann::json::array();
  for (const auto& r : p.required) j["required"].push_back({{"id", r.id}, {"fraction", r.fraction}});
  j["forbidden"] = p.forbidden;
  j["tolerance"] = p.tolerance;
  j["text"] = p.text ? nlohmann::json(*p.text) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Prompt& p) {
  p = Prompt{};
  for (const auto& r : j.at("required")) p.required.push_back({r.at("id").get<int>(), r.at("fraction").get<double>()});
  if (j.contains("forbidden")) p.forbidden = j.at("forbidden").get<std::vector<int>>();
  if (j.contains("tolerance")) p.tolerance = j.at("tolerance").get<double>();
  if (j.contains("text") && !j.at("text").is_null()) p.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const Condition& c) { j = {{"weights", c.weights}, {"suppress", c.suppress}}; }

void from_json(const nlohmann::json& j, Condition& c) {
  c.weights = j.at("weights").get<std::vector<double>>();
  c.suppress = j.at("suppress").get<std::vector<double>>();
}

}  // namespace pingpong
