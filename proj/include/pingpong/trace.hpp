// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pingpong/critic.hpp"
#include "pingpong/latent.hpp"

namespace pingpong {

enum class OpKind {
  kReverse,
  kPing,
  kPong,
  kAhead,
  kZigzag,
  kPreview,
  kCheck,
  kSynthesize,
  kEarlyStop,
  kFallback,
};

std::string to_string(OpKind kind);
OpKind parse_op_kind(const std::string& name);
/// Ops that move the trajectory: reverse, ping, pong, ahead, zigzag.
bool advances_state(OpKind kind);

struct TraceRecord {
  int t = 0;  // timestep of the state the op produced (or inspected)
  OpKind kind = OpKind::kReverse;
  std::optional<double> score;
  std::optional<Correction> correction;
  std::optional<NoiseSource> noise;  // draw consumed by ping / zigzag
  std::uint64_t ping_counter = 0;    // next unused block of the ping stream
  std::optional<std::uint64_t> digest;
  std::optional<std::string> note;
};

/// Ordered log of one sampling run. Line 1 of the JSONL form is the header.
class RunTrace {
 public:
  nlohmann::json header;
  std::vector<TraceRecord> records;

  void add(TraceRecord r) { records.push_back(std::move(r)); }
  std::size_t count(OpKind kind) const;

  /// FNV-1a over (t, kind, latent digest) of every state-advancing record, in
  /// order. Two runs that move through the same latents share this value.
  std::uint64_t digest() const;

  std::string to_jsonl() const;
  void write_jsonl(const std::string& path) const;
};

nlohmann::json record_to_json(const TraceRecord& r);
std::string hex64(std::uint64_t v);

}  // namespace pingpong
