// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/critic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <httplib.h>

#include "pingpong/errors.hpp"

namespace pingpong {

namespace {

// Slack on the closed tolerance interval so that boundary shares computed in
// floating point still pass.
constexpr double kBoundarySlack = 1e-12;

std::string fmt_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kMissing:
      return "missing";
    case FeedbackKind::kExcess:
      return "excess";
    case FeedbackKind::kForbiddenPresent:
      return "forbidden-present";
  }
  return "missing";
}

void to_json(nlohmann::json& j, const FeedbackItem& f) {
  j = {{"component", f.component}, {"kind", to_string(f.kind)}, {"observed", f.observed}, {"target", f.target}};
}

void to_json(nlohmann::json& j, const Critique& c) {
  j = {{"score", c.score}, {"feedback", c.feedback}, {"diagnosis", c.diagnosis}};
}

void to_json(nlohmann::json& j, const Correction& c) {
  j = {{"refined", c.refined}, {"omissions", c.omissions}};
  if (c.refined_text) j["refined_text"] = *c.refined_text;
  if (c.avoid_text) j["avoid_text"] = *c.avoid_text;
}

std::vector<double> occupancy(const LatentState& sample, const GMMWorld& world) {
  std::vector<double> share(world.components(), 0.0);
  const std::size_t M = sample.x.rows();
  if (M == 0) return share;
  for (std::size_t i = 0; i < M; ++i) share[world.nearest_component(sample.x.row(i))] += 1.0;
  for (double& v : share) v /= static_cast<double>(M);
  return share;
}

Critique oracle_check(const LatentState& preview, const Prompt& p, const GMMWorld& world) {
  p.validate(world.components());
  const std::vector<double> share = occupancy(preview, world);

  std::vector<FeedbackItem> missing, excess, forbidden;
  for (const auto& r : p.required) {
    const double obs = share[r.id];
    if (obs < r.fraction - p.tolerance - kBoundarySlack) {
      missing.push_back({r.id, FeedbackKind::kMissing, obs, r.fraction});
    } else if (obs > r.fraction + p.tolerance + kBoundarySlack) {
      excess.push_back({r.id, FeedbackKind::kExcess, obs, r.fraction});
    }
  }
  for (int f : p.forbidden) {
    if (share[f] > p.tolerance + kBoundarySlack) forbidden.push_back({f, FeedbackKind::kForbiddenPresent, share[f], 0.0});
  }
  auto by_id = [](const FeedbackItem& a, const FeedbackItem& b) { return a.component < b.component; };
  std::sort(missing.begin(), missing.end(), by_id);
  std::sort(excess.begin(), excess.end(), by_id);
  std::sort(forbidden.begin(), forbidden.end(), by_id);

  Critique c;
  c.feedback = std::move(missing);
  c.feedback.insert(c.feedback.end(), excess.begin(), excess.end());
  c.feedback.insert(c.feedback.end(), forbidden.begin(), forbidden.end());
  c.score = c.feedback.empty() ? 1.0 : 0.0;

  std::ostringstream text;
  int n = 1;
  for (const auto& f : c.feedback) {
    text << n++ << ". component " << f.component << ' ' << to_string(f.kind) << ": observed "
         << fmt_fraction(f.observed) << ", target " << fmt_fraction(f.target) << '\n';
  }
  c.diagnosis = c.feedback.empty() ? std::string(kConsistentSentinel) : text.str();
  return c;
}

Correction oracle_synthesize(const Critique& c, const Prompt& p, const Condition& base, double kappa) {
  if (c.score >= 1.0) throw ContractError("oracle_synthesize: critique passed; the caller must early-stop instead");
  if (!(kappa >= 0.0)) throw RangeError("kappa: must be >= 0");
  const std::size_t K = base.components();
  p.validate(K);

  // Deficits come from the flagged items; required components inside their
  // tolerance band are left as they are.
  std::vector<double> refined = base.weights;
  for (const auto& f : c.feedback) {
    if (f.kind == FeedbackKind::kMissing) refined[f.component] += kappa * std::max(0.0, f.target - f.observed);
  }

  Correction out;
  out.refined.weights = normalize_weights(std::move(refined), "oracle_synthesize");
  out.refined.suppress.assign(K, 0.0);
  for (int f : p.forbidden) out.refined.suppress[f] = 1.0;

  out.omissions.weights.assign(K, 1.0 / static_cast<double>(K));
  out.omissions.suppress.assign(K, 0.0);
  for (const auto& f : c.feedback) {
    if (f.kind == FeedbackKind::kExcess || f.kind == FeedbackKind::kForbiddenPresent) {
      out.omissions.suppress[f.component] = std::min(1.0, f.observed - f.target);
    }
  }
  return out;
}

std::string render_preview(const LatentState& preview, const GMMWorld& world, int size) {
  if (size < 64) throw RangeError("size: canvas must be at least 64 pixels");
  static constexpr unsigned char kPalette[][3] = {
      {230, 25, 75}, {60, 180, 75}, {0, 130, 200}, {245, 130, 48}, {145, 30, 180},
      {70, 240, 240}, {240, 50, 230}, {128, 128, 0}, {0, 128, 128}, {128, 0, 0},
  };
  double extent = 0.0;
  for (std::size_t k = 0; k < world.components(); ++k) {
    double m = 0.0;
    for (double v : world.means.row(k)) m = std::max(m, std::abs(v));
    extent = std::max(extent, m + 3.0 * world.scales[k]);
  }
  if (!(extent > 0.0)) extent = 1.0;

  const std::string header = "P6\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
  std::string img(header.size() + static_cast<std::size_t>(size) * size * 3, static_cast<char>(255));
  std::copy(header.begin(), header.end(), img.begin());
  const std::size_t base = header.size();

  for (std::size_t i = 0; i < preview.x.rows(); ++i) {
    auto p = preview.x.row(i);
    const double px = p.size() > 0 ? p[0] : 0.0;
    const double py = p.size() > 1 ? p[1] : 0.0;
    if (!std::isfinite(px) || !std::isfinite(py)) continue;
    const int cx = static_cast<int>(std::floor((px / extent + 1.0) * 0.5 * size));
    const int cy = static_cast<int>(std::floor((1.0 - py / extent) * 0.5 * size));
    const auto& color = kPalette[world.nearest_component(p) % 10];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = cx + dx;
        const int y = cy + dy;
        if (x < 0 || y < 0 || x >= size || y >= size) continue;
        const std::size_t off = base + (static_cast<std::size_t>(y) * size + x) * 3;
        img[off] = static_cast<char>(color[0]);
        img[off + 1] = static_cast<char>(color[1]);
        img[off + 2] = static_cast<char>(color[2]);
      }
    }
  }
  return img;
}

Critique OracleCritic::check(const LatentState& preview, const Prompt& p, int) {
  return oracle_check(preview, p, world_);
}

Correction OracleCritic::synthesize(const Critique& c, const Prompt& p, const Condition& base, int) {
  return oracle_synthesize(c, p, base, kappa_);
}

Correction ConsistentCritic::synthesize(const Critique&, const Prompt&, const Condition&, int) {
  throw ContractError("ConsistentCritic: synthesize called on a consistent critique");
}

RoundMode parse_round_mode(const std::string& name) {
  if (name == "1r") return RoundMode::k1r;
  if (name == "2r") return RoundMode::k2r;
  if (name == "3r") return RoundMode::k3r;
  if (name == "4r") return RoundMode::k4r;
  throw RangeError("rounds: unknown value '" + name + "'");
}

std::string to_string(RoundMode mode) {
  switch (mode) {
    case RoundMode::k1r:
      return "1r";
    case RoundMode::k2r:
      return "2r";
    case RoundMode::k3r:
      return "3r";
    case RoundMode::k4r:
      return "4r";
  }
  return "2r";
}

int round_count(RoundMode mode) { return static_cast<int>(mode) + 1; }

std::string render_template(std::string_view tmpl, const std::string& original_prompt, const std::string& diagnosis) {
  static constexpr std::string_view kPrompt = "{original_prompt}";
  static constexpr std::string_view kDiagnosis = "{diagnosis}";
  std::string out;
  out.reserve(tmpl.size() + original_prompt.size() + diagnosis.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.substr(i, kPrompt.size()) == kPrompt) {
      out += original_prompt;
      i += kPrompt.size();
    } else if (tmpl.substr(i, kDiagnosis.size()) == kDiagnosis) {
      out += diagnosis;
      i += kDiagnosis.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string critic_request_body(const CriticRequest& r) {
  nlohmann::ordered_json j;
  j["round"] = to_string(r.round);
  j["step"] = r.step;
  j["prompt"] = r.prompt;
  j["image_b64"] = r.image_b64;
  j["diagnosis"] = r.diagnosis ? nlohmann::ordered_json(*r.diagnosis) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

CriticRequest parse_critic_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    CriticRequest r;
    r.round = parse_round_mode(j.at("round").get<std::string>());
    r.step = j.at("step").get<int>();
    r.prompt = j.at("prompt").get<std::string>();
    r.image_b64 = j.at("image_b64").get<std::string>();
    if (!j.at("diagnosis").is_null()) r.diagnosis = j.at("diagnosis").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("critic request: ") + e.what(), body);
  }
}

std::string critic_response_body(const CriticResponse& r) {
  nlohmann::ordered_json j;
  j["score"] = r.score;
  j["diagnosis"] = r.diagnosis;
  j["refined"] = r.refined;
  j["avoid"] = r.avoid;
  if (r.cond) {
    j["cond"] = {{"weights", r.cond->weights}, {"suppress", r.cond->suppress}};
  } else {
    j["cond"] = nullptr;
  }
  return j.dump();
}

CriticResponse parse_critic_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    CriticResponse r;
    r.score = j.at("score").get<double>();
    r.diagnosis = j.at("diagnosis").get<std::string>();
    r.refined = j.value("refined", std::string{});
    r.avoid = j.value("avoid", std::string{});
    if (j.contains("cond") && !j.at("cond").is_null()) r.cond = j.at("cond").get<Condition>();
    if (!(r.score >= 0.0 && r.score <= 1.0)) throw ParseError("critic response: score outside [0,1]", body);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("critic response: ") + e.what(), body);
  }
}

MllmCritic::MllmCritic(MllmCriticOptions options, GMMWorld world)
    : options_(std::move(options)), world_(std::move(world)) {
  Endpoint::parse(options_.endpoint);
  world_.validate();
}

const std::string& MllmCritic::prompt_text(const Prompt& p) const {
  if (!p.text || p.text->empty()) throw ContractError("mllm critic: prompt text must be non-empty");
  return *p.text;
}

CriticResponse MllmCritic::post(const CriticRequest& req) {
  const Endpoint ep = Endpoint::parse(options_.endpoint);
  httplib::Client client(ep.base);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  ++requests_;
  const std::string body = critic_request_body(req);
  httplib::Result res = client.Post(ep.prefix + "/critic", body, "application/json");
  if (!res) throw RemoteError(options_.endpoint, req.step, "transport failure: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw RemoteError(options_.endpoint, req.step, "HTTP status " + std::to_string(res->status),
                      res->body.substr(0, 200));
  }
  return parse_critic_response(res->body);
}

namespace {

std::string join_questions(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '\n';
    out += p;
  }
  return out;
}

double judged_score(const CriticResponse& r) {
  std::string d = r.diagnosis;
  d.erase(0, d.find_first_not_of(" \t\r\n"));
  d.erase(d.find_last_not_of(" \t\r\n") + 1);
  return d == kConsistentSentinel ? 1.0 : r.score;
}

}  // namespace

Critique MllmCritic::check(const LatentState& preview, const Prompt& p, int step) {
  const std::string& text = prompt_text(p);
  pending_.reset();
  diagnosis_.clear();
  image_b64_ = httplib::detail::base64_encode(render_preview(preview, world_, options_.image_size));

  const std::string judge = render_template(Templates::judge(), text, "");
  const std::string analyze = render_template(Templates::analyze(), text, "");
  CriticRequest req{options_.rounds, step, {}, image_b64_, std::nullopt};

  Critique c;
  switch (options_.rounds) {
    case RoundMode::k1r: {
      req.prompt = join_questions({judge, analyze,
                                   render_template(Templates::refine(), text, std::string(kSameRoundDiagnosis)),
                                   render_template(Templates::omission(), text, std::string(kSameRoundDiagnosis))});
      CriticResponse r = post(req);
      c.score = judged_score(r);
      c.diagnosis = r.diagnosis;
      pending_ = std::move(r);
      break;
    }
    case RoundMode::k2r: {
      req.prompt = join_questions({judge, analyze});
      const CriticResponse r = post(req);
      c.score = judged_score(r);
      c.diagnosis = r.diagnosis;
      break;
    }
    case RoundMode::k3r:
    case RoundMode::k4r: {
      req.prompt = judge;
      const CriticResponse verdict = post(req);
      c.score = judged_score(verdict);
      if (c.score >= options_.tau_stop) {
        c.diagnosis = verdict.diagnosis;
        break;
      }
      req.prompt = analyze;
      req.diagnosis = verdict.diagnosis;
      const CriticResponse analysis = post(req);
      c.diagnosis = analysis.diagnosis;
      break;
    }
  }
  diagnosis_ = c.diagnosis;
  return c;
}

Correction MllmCritic::synthesize(const Critique& c, const Prompt& p, const Condition& base, int step) {
  if (c.score >= 1.0) throw ContractError("mllm critic: synthesize called on a consistent critique");
  const std::string& text = prompt_text(p);
  const std::string refine = render_template(Templates::refine(), text, diagnosis_);
  const std::string omission = render_template(Templates::omission(), text, diagnosis_);
  CriticRequest req{options_.rounds, step, {}, image_b64_, diagnosis_};

  CriticResponse merged;
  switch (options_.rounds) {
    case RoundMode::k1r:
      if (!pending_) throw ContractError("mllm critic: synthesize without a preceding check");
      merged = *pending_;
      break;
    case RoundMode::k2r:
    case RoundMode::k3r:
      req.prompt = join_questions({refine, omission});
      merged = post(req);
      break;
    case RoundMode::k4r: {
      req.prompt = refine;
      merged = post(req);
      req.prompt = omission;
      const CriticResponse avoid = post(req);
      merged.avoid = avoid.avoid;
      if (!merged.cond) merged.cond = avoid.cond;
      break;
    }
  }
  pending_.reset();

  Correction out;
  out.refined = base;
  out.omissions = Condition{base.weights, std::vector<double>(base.components(), 0.0)};
  if (options_.structured_cond && merged.cond) {
    merged.cond->validate();
    if (merged.cond->components() != base.components()) {
      throw ParseError("critic response: cond length does not match component count", merged.refined);
    }
    out.refined = *merged.cond;
  }
  out.refined_text = merged.refined;
  out.avoid_text = merged.avoid;
  return out;
}

std::pair<Critique, std::optional<Correction>> mllm_check(MllmCritic& critic, const LatentState& preview,
                                                           const Prompt& p, const Condition& base, int step,
                                                           double tau_stop) {
  Critique c = critic.check(preview, p, step);
  if (c.score >= tau_stop) return {std::move(c), std::nullopt};
  Correction corr = critic.synthesize(c, p, base, step);
  return {std::move(c), std::move(corr)};
}

}  // namespace pingpong
