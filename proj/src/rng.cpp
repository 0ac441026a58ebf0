// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/rng.hpp"

#include <cmath>
#include <numbers>

namespace pingpong {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Philox::Block Philox::block(std::uint64_t stream, std::uint64_t counter) const {
  Block ctr{static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

std::uint64_t fill_normals(const Philox& rng, std::uint64_t stream, std::uint64_t first_block, std::span<double> out) {
  const std::uint64_t blocks = (out.size() + 1) / 2;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const Philox::Block r = rng.block(stream, first_block + b);
    // Box-Muller; u1 in (0,1] keeps the log finite.
    const double u1 = 1.0 - to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[2 * b] = radius * std::cos(angle);
    if (2 * b + 1 < out.size()) out[2 * b + 1] = radius * std::sin(angle);
  }
  return blocks;
}

std::uint64_t fill_uniforms(const Philox& rng, std::uint64_t stream, std::uint64_t first_block, std::span<double> out) {
  const std::uint64_t blocks = (out.size() + 1) / 2;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const Philox::Block r = rng.block(stream, first_block + b);
    out[2 * b] = to_unit(r[0], r[1]);
    if (2 * b + 1 < out.size()) out[2 * b + 1] = to_unit(r[2], r[3]);
  }
  return blocks;
}

std::uint64_t StreamCursor::normals(std::span<double> out) {
  const std::uint64_t start = counter_;
  counter_ += fill_normals(*rng_, stream_, counter_, out);
  return start;
}

std::uint64_t StreamCursor::uniforms(std::span<double> out) {
  const std::uint64_t start = counter_;
  counter_ += fill_uniforms(*rng_, stream_, counter_, out);
  return start;
}

}  // namespace pingpong
