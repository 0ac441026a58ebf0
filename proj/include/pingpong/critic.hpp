// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pingpong/denoiser.hpp"
#include "pingpong/latent.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

enum class FeedbackKind { kMissing, kExcess, kForbiddenPresent };

std::string to_string(FeedbackKind kind);

struct FeedbackItem {
  int component = 0;
  FeedbackKind kind = FeedbackKind::kMissing;
  double observed = 0.0;
  double target = 0.0;
  bool operator==(const FeedbackItem&) const = default;
};

/// Consistency verdict: score in [0,1] plus structured and textual feedback.
struct Critique {
  double score = 0.0;
  std::vector<FeedbackItem> feedback;
  std::string diagnosis;  // numbered mismatch list
};

struct Correction {
  Condition refined;    // reinforced condition
  Condition omissions;  // carries only suppression mass
  std::optional<std::string> refined_text;
  std::optional<std::string> avoid_text;
};

void to_json(nlohmann::json& j, const FeedbackItem& f);
void to_json(nlohmann::json& j, const Critique& c);
void to_json(nlohmann::json& j, const Correction& c);

/// Share of points whose nearest component mean is k, for every k.
std::vector<double> occupancy(const LatentState& sample, const GMMWorld& world);

/// Geometric rule check: each required share within target +- tolerance
/// (closed interval), each forbidden share at most the tolerance. Score is 1
/// when every rule passes and 0 otherwise.
Critique oracle_check(const LatentState& preview, const Prompt& p, const GMMWorld& world);

/// Turns a failed critique into a correction:
/// refined = normalize(base + kappa * deficit), omissions.suppress = min(1, excess)
/// on excess and forbidden items. ContractError when the critique passed.
Correction oracle_synthesize(const Critique& c, const Prompt& p, const Condition& base, double kappa);

/// Deterministic binary PPM (P6) scatter plot of the batch on a size x size canvas.
/// The canvas spans [-R, R]^2 with R = max_k(max|mu_k| + 3 s_k); the world
/// origin maps to pixel (size/2, size/2).
std::string render_preview(const LatentState& preview, const GMMWorld& world, int size);

/// Critic used by the sampler: a checker plus a corrective synthesizer.
class Critic {
 public:
  virtual ~Critic() = default;
  virtual Critique check(const LatentState& preview, const Prompt& p, int step) = 0;
  virtual Correction synthesize(const Critique& c, const Prompt& p, const Condition& base, int step) = 0;
};

class OracleCritic final : public Critic {
 public:
  OracleCritic(GMMWorld world, double kappa) : world_(std::move(world)), kappa_(kappa) {}
  Critique check(const LatentState& preview, const Prompt& p, int step) override;
  Correction synthesize(const Critique& c, const Prompt& p, const Condition& base, int step) override;

 private:
  GMMWorld world_;
  double kappa_;
};

/// Always reports consistency; synthesize is a contract error.
class ConsistentCritic final : public Critic {
 public:
  Critique check(const LatentState&, const Prompt&, int) override { return Critique{1.0, {}, "CONSISTENT"}; }
  Correction synthesize(const Critique&, const Prompt&, const Condition&, int) override;
};

enum class RoundMode { k1r, k2r, k3r, k4r };

RoundMode parse_round_mode(const std::string& name);
std::string to_string(RoundMode mode);
int round_count(RoundMode mode);

/// Question templates sent to a multimodal critic. The analyze, refine and
/// omission texts are embedded byte-exact; {original_prompt} and {diagnosis}
/// are the only placeholders.
struct Templates {
  static std::string_view analyze();
  static std::string_view refine();
  static std::string_view omission();
  static std::string_view judge();
};

std::string render_template(std::string_view tmpl, const std::string& original_prompt, const std::string& diagnosis);

/// Text substituted for {diagnosis} when the issues are requested in the same round.
inline constexpr std::string_view kSameRoundDiagnosis = "(the issues identified in the analysis above)";

/// Marker a multimodal critic may return instead of a mismatch list.
inline constexpr std::string_view kConsistentSentinel = "CONSISTENT";

struct CriticRequest {
  RoundMode round = RoundMode::k2r;
  int step = 0;
  std::string prompt;
  std::string image_b64;
  std::optional<std::string> diagnosis;
};

struct CriticResponse {
  double score = 0.0;
  std::string diagnosis;
  std::string refined;
  std::string avoid;
  std::optional<Condition> cond;
};

std::string critic_request_body(const CriticRequest& r);
CriticRequest parse_critic_request(const std::string& body);
std::string critic_response_body(const CriticResponse& r);
/// ParseError carrying the raw text when the body is not a valid response.
CriticResponse parse_critic_response(const std::string& body);

struct MllmCriticOptions {
  std::string endpoint;
  RoundMode rounds = RoundMode::k2r;
  double tau_stop = 0.5;
  int image_size = 128;
  bool structured_cond = false;  // use the response "cond" mapping when present
  std::chrono::milliseconds timeout{10000};
};

/// Remote multimodal critic speaking the /critic protocol. Issues 1-4 requests
/// per correction depending on the round mode; the rounds are
///   1r: judge+analyze+refine+omission
///   2r: judge+analyze | refine+omission
///   3r: judge | analyze | refine+omission
///   4r: judge | analyze | refine | omission
/// Later rounds are skipped once the judgement reaches tau_stop.
class MllmCritic final : public Critic {
 public:
  MllmCritic(MllmCriticOptions options, GMMWorld world);
  Critique check(const LatentState& preview, const Prompt& p, int step) override;
  Correction synthesize(const Critique& c, const Prompt& p, const Condition& base, int step) override;

  std::uint64_t requests_sent() const { return requests_; }

 private:
  CriticResponse post(const CriticRequest& req);
  const std::string& prompt_text(const Prompt& p) const;

  MllmCriticOptions options_;
  GMMWorld world_;
  std::uint64_t requests_ = 0;
  // State threaded from check() to synthesize() within one checkpoint.
  std::string image_b64_;
  std::string diagnosis_;
  std::optional<CriticResponse> pending_;
};

/// Performs the full check/synthesize exchange for one preview.
std::pair<Critique, std::optional<Correction>> mllm_check(MllmCritic& critic, const LatentState& preview,
                                                           const Prompt& p, const Condition& base, int step,
                                                           double tau_stop);

}  // namespace pingpong
