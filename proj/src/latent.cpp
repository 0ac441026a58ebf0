// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/latent.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "pingpong/errors.hpp"

namespace pingpong {

Points::Points(std::size_t rows, std::size_t dims, std::vector<double> data)
    : rows_(rows), dims_(dims), data_(std::move(data)) {
  if (data_.size() != rows_ * dims_) {
    throw ShapeError("points: " + std::to_string(data_.size()) + " values do not form " + std::to_string(rows_) +
                     "x" + std::to_string(dims_));
  }
}

bool Points::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> Points::mean() const {
  std::vector<double> m(dims_, 0.0);
  if (rows_ == 0) return m;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t d = 0; d < dims_; ++d) m[d] += at(i, d);
  }
  for (double& v : m) v /= static_cast<double>(rows_);
  return m;
}

Points axpby(double a, const Points& x, double b, const Points& y) {
  if (!x.same_shape(y)) throw ShapeError("axpby: operand shapes differ");
  Points out(x.rows(), x.dims());
  auto o = out.flat();
  auto xs = x.flat();
  auto ys = y.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * xs[i] + b * ys[i];
  return out;
}

NoiseDraw draw_noise(StreamCursor& cursor, std::uint64_t seed, std::size_t rows, std::size_t dims) {
  NoiseDraw draw{Points(rows, dims), NoiseSource{seed, cursor.stream(), 0, false}};
  draw.source.counter = cursor.normals(draw.eps.flat());
  return draw;
}

NoiseDraw regenerate_noise(const NoiseSource& source, std::size_t rows, std::size_t dims) {
  if (source.injected) throw ContractError("regenerate_noise: injected draws have no RNG source");
  NoiseDraw draw{Points(rows, dims), source};
  Philox rng(source.seed);
  fill_normals(rng, source.stream, source.counter, draw.eps.flat());
  return draw;
}

NoiseDraw injected_noise(Points eps) { return NoiseDraw{std::move(eps), NoiseSource{0, 0, 0, true}}; }

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t hash) {
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

std::array<unsigned char, 8> le_bytes(std::uint64_t v) {
  std::array<unsigned char, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
  return out;
}

}  // namespace

std::uint64_t latent_digest(const LatentState& state) {
  std::uint64_t h = fnv1a(le_bytes(static_cast<std::uint64_t>(static_cast<std::int64_t>(state.t))));
  for (double v : state.x.flat()) {
    const double canon = (v == 0.0) ? 0.0 : v;
    h = fnv1a(le_bytes(std::bit_cast<std::uint64_t>(canon)), h);
  }
  return h;
}

}  // namespace pingpong
