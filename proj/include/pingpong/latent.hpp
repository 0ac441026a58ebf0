// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pingpong/rng.hpp"

namespace pingpong {

/// Row-major batch of M points in D dimensions.
class Points {
 public:
  Points() = default;
  Points(std::size_t rows, std::size_t dims, double fill = 0.0) : rows_(rows), dims_(dims), data_(rows * dims, fill) {}
  Points(std::size_t rows, std::size_t dims, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dims_, dims_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }
  double& at(std::size_t i, std::size_t d) { return data_[i * dims_ + d]; }
  double at(std::size_t i, std::size_t d) const { return data_[i * dims_ + d]; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Points& other) const { return rows_ == other.rows_ && dims_ == other.dims_; }
  bool all_finite() const;

  /// Per-dimension mean over rows.
  std::vector<double> mean() const;

  bool operator==(const Points&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> data_;
};

/// a*x + b*y elementwise; shapes must match.
Points axpby(double a, const Points& x, double b, const Points& y);

/// A batch tagged with its timestep.
struct LatentState {
  Points x;
  int t = 0;
};

/// Where a NoiseDraw came from: enough to regenerate it bit-for-bit.
struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;
  bool injected = false;  // true when supplied directly rather than drawn

  bool operator==(const NoiseSource&) const = default;
};

struct NoiseDraw {
  Points eps;
  NoiseSource source;
};

/// Draws a standard normal batch from the cursor's stream, advancing it.
NoiseDraw draw_noise(StreamCursor& cursor, std::uint64_t seed, std::size_t rows, std::size_t dims);
/// Regenerates a draw from its recorded source.
NoiseDraw regenerate_noise(const NoiseSource& source, std::size_t rows, std::size_t dims);
/// Wraps explicit values (tests, zero-noise variants).
NoiseDraw injected_noise(Points eps);

/// 64-bit FNV-1a over the canonical byte form of a latent: t as little-endian
/// int64, then every coordinate row-major as little-endian IEEE-754 binary64
/// with -0.0 written as +0.0.
std::uint64_t latent_digest(const LatentState& state);

/// FNV-1a continuation over raw bytes.
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace pingpong
