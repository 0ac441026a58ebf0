// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/trace.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "pingpong/errors.hpp"

namespace pingpong {

namespace {

constexpr std::array<std::pair<OpKind, const char*>, 10> kNames = {{
    {OpKind::kReverse, "reverse"},
    {OpKind::kPing, "ping"},
    {OpKind::kPong, "pong"},
    {OpKind::kAhead, "ahead"},
    {OpKind::kZigzag, "zigzag"},
    {OpKind::kPreview, "preview"},
    {OpKind::kCheck, "check"},
    {OpKind::kSynthesize, "synthesize"},
    {OpKind::kEarlyStop, "early-stop"},
    {OpKind::kFallback, "fallback"},
}};

}  // namespace

std::string to_string(OpKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "reverse";
}

OpKind parse_op_kind(const std::string& name) {
  for (const auto& [k, n] : kNames) {
    if (name == n) return k;
  }
  throw RangeError("op kind: unknown value '" + name + "'");
}

bool advances_state(OpKind kind) {
  switch (kind) {
    case OpKind::kReverse:
    case OpKind::kPing:
    case OpKind::kPong:
    case OpKind::kAhead:
    case OpKind::kZigzag:
      return true;
    default:
      return false;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t RunTrace::count(OpKind kind) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.kind == kind;
  return n;
}

std::uint64_t RunTrace::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : records) {
    if (!advances_state(r.kind)) continue;
    const std::string line = std::to_string(r.t) + ":" + to_string(r.kind) + ":" + hex64(r.digest.value_or(0)) + ";";
    h = fnv1a({reinterpret_cast<const unsigned char*>(line.data()), line.size()}, h);
  }
  return h;
}

nlohmann::json record_to_json(const TraceRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["kind"] = to_string(r.kind);
  if (r.score) j["score"] = *r.score;
  if (r.correction) j["correction"] = *r.correction;
  if (r.noise) {
    j["noise"] = {{"seed", r.noise->seed},
                  {"stream", r.noise->stream},
                  {"counter", r.noise->counter},
                  {"injected", r.noise->injected}};
  }
  j["rng"] = {{"ping", r.ping_counter}};
  if (r.digest) j["digest"] = hex64(*r.digest);
  if (r.note) j["note"] = *r.note;
  return j;
}

std::string RunTrace::to_jsonl() const {
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void RunTrace::write_jsonl(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("trace: cannot open " + path + " for writing");
  f << to_jsonl();
}

}  // namespace pingpong
