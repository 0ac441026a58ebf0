// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace pingpong {

/// Fixed stream ids. Each stream is an independent, counter-addressed sequence.
enum class Stream : std::uint64_t {
  kInitialNoise = 0,  // x_T draws
  kPing = 1,          // fresh noise injected by back-steps
  kPerturbation = 2,  // random directions of the perturbed denoiser
  kTest = 7,
};

/// Philox4x32-10 counter-based generator.
///
/// A 64-bit seed forms the key; the 128-bit counter is (block, stream). Block i
/// of a stream always yields the same 128 bits, so any draw can be regenerated
/// from (seed, stream, block) alone.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed) : seed_(seed) {}

  Block block(std::uint64_t stream, std::uint64_t counter) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Standard normals for indices [first_block*2, ...) of a stream, written to out.
/// Consumes ceil(out.size()/2) blocks. Returns the number of blocks consumed.
std::uint64_t fill_normals(const Philox& rng, std::uint64_t stream, std::uint64_t first_block, std::span<double> out);

/// Uniform doubles in [0,1) with 53-bit resolution, one per 64 bits.
std::uint64_t fill_uniforms(const Philox& rng, std::uint64_t stream, std::uint64_t first_block, std::span<double> out);

/// Sequential cursor over one stream; the counter is the next unused block.
class StreamCursor {
 public:
  StreamCursor(const Philox& rng, std::uint64_t stream, std::uint64_t counter = 0)
      : rng_(&rng), stream_(stream), counter_(counter) {}

  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Fills out with normals and advances; returns the starting counter.
  std::uint64_t normals(std::span<double> out);
  std::uint64_t uniforms(std::span<double> out);

 private:
  const Philox* rng_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

}  // namespace pingpong
