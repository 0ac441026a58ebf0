// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "pingpong/lookahead.hpp"
#include "pingpong/operators.hpp"

namespace pingpong {

Method parse_method(const std::string& name) {
  if (name == "vanilla") return Method::kVanilla;
  if (name == "zigzag") return Method::kZigzag;
  if (name == "ppad") return Method::kPpad;
  throw RangeError("method: unknown value '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kVanilla:
      return "vanilla";
    case Method::kZigzag:
      return "zigzag";
    case Method::kPpad:
      return "ppad";
  }
  return "vanilla";
}

Injection parse_injection(const std::string& name) {
  if (name == "ping-pong-ahead") return Injection::kPingPongAhead;
  if (name == "next-step") return Injection::kNextStep;
  throw RangeError("injection: unknown value '" + name + "'");
}

std::string to_string(Injection i) { return i == Injection::kPingPongAhead ? "ping-pong-ahead" : "next-step"; }

NoisePlacement parse_noise_placement(const std::string& name) {
  if (name == "ping") return NoisePlacement::kPing;
  if (name == "pong") return NoisePlacement::kPong;
  throw RangeError("noise_placement: unknown value '" + name + "'");
}

std::string to_string(NoisePlacement p) { return p == NoisePlacement::kPing ? "ping" : "pong"; }

SamplerConfig SamplerConfig::resolved(int steps) const {
  SamplerConfig c = *this;
  if (c.t_hi == 0) c.t_hi = static_cast<int>(std::lround(0.8 * steps));
  if (c.t_lo == 0) c.t_lo = std::max(1, static_cast<int>(std::lround(0.2 * steps)));
  if (!(1 <= c.t_lo && c.t_lo < c.t_hi && c.t_hi <= steps)) {
    throw RangeError("t_lo/t_hi: need 1 <= t_lo < t_hi <= T, got t_lo=" + std::to_string(c.t_lo) +
                     " t_hi=" + std::to_string(c.t_hi));
  }
  if (c.stride < 1) throw RangeError("delta: stride must be >= 1");
  if (!(c.tau_stop > 0.0 && c.tau_stop <= 1.0)) throw RangeError("tau_stop: must lie in (0,1]");
  if (!(c.gamma > 0.0)) throw RangeError("gamma: must be > 0");
  if (!(c.lambda >= 0.0)) throw RangeError("lambda: must be >= 0");
  if (!(c.kappa >= 0.0)) throw RangeError("kappa: must be >= 0");
  if (c.batch < 1) throw RangeError("batch: must be >= 1");
  if (!(c.ping_noise_scale >= 0.0)) throw RangeError("ping_noise_scale: must be >= 0");
  return c;
}

std::vector<int> SamplerConfig::checkpoints() const {
  std::vector<int> out;
  for (int t = t_hi; t >= t_lo; t -= stride) out.push_back(t);
  return out;
}

void to_json(nlohmann::json& j, const SamplerConfig& c) {
  j = {{"method", to_string(c.method)},
       {"t_hi", c.t_hi},
       {"t_lo", c.t_lo},
       {"delta", c.stride},
       {"gamma", c.gamma},
       {"tau_stop", c.tau_stop},
       {"lambda", c.lambda},
       {"kappa", c.kappa},
       {"seed", c.seed},
       {"batch", c.batch},
       {"lookahead", c.lookahead},
       {"injection", to_string(c.injection)},
       {"persist_correction", c.persist_correction},
       {"noise_placement", to_string(c.noise_placement)},
       {"ping_noise_scale", c.ping_noise_scale}};
}

void from_json(const nlohmann::json& j, SamplerConfig& c) {
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("t_hi")) c.t_hi = j.at("t_hi").get<int>();
  if (j.contains("t_lo")) c.t_lo = j.at("t_lo").get<int>();
  if (j.contains("delta")) c.stride = j.at("delta").get<int>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
  if (j.contains("tau_stop")) c.tau_stop = j.at("tau_stop").get<double>();
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("batch")) c.batch = j.at("batch").get<std::size_t>();
  if (j.contains("lookahead")) c.lookahead = j.at("lookahead").get<bool>();
  if (j.contains("injection")) c.injection = parse_injection(j.at("injection").get<std::string>());
  if (j.contains("persist_correction")) c.persist_correction = j.at("persist_correction").get<bool>();
  if (j.contains("noise_placement")) {
    c.noise_placement = parse_noise_placement(j.at("noise_placement").get<std::string>());
  }
  if (j.contains("ping_noise_scale")) c.ping_noise_scale = j.at("ping_noise_scale").get<double>();
}

LatentState initial_latent(std::uint64_t seed, std::size_t rows, std::size_t dims, int steps) {
  Philox rng(seed);
  StreamCursor cursor(rng, static_cast<std::uint64_t>(Stream::kInitialNoise));
  NoiseDraw draw = draw_noise(cursor, seed, rows, dims);
  return {std::move(draw.eps), steps};
}

namespace {

TraceRecord make_record(int t, OpKind kind) {
  TraceRecord r;
  r.t = t;
  r.kind = kind;
  return r;
}

/// Shared state of one run: the trajectory, its trace and the ping stream.
class Run {
 public:
  Run(const SamplingContext& ctx, Method method)
      : ctx_(ctx),
        cfg_(ctx.config.resolved(ctx.schedule->steps())),
        s_(*ctx.schedule),
        den_(*ctx.denoiser),
        rng_(cfg_.seed),
        ping_cursor_(rng_, static_cast<std::uint64_t>(Stream::kPing)) {
    cfg_.method = method;
    nlohmann::json cfg_json = cfg_;
    trace_.header = {{"type", "header"},
                     {"version", kVersion},
                     {"method", to_string(method)},
                     {"sampler", cfg_json},
                     {"steps", s_.steps()},
                     {"prompt", ctx.prompt},
                     {"condition", ctx.condition},
                     {"provenance", ctx.provenance}};
    x_ = initial_latent(cfg_.seed, cfg_.batch, ctx.dims, s_.steps());
    checkpoints_ = cfg_.checkpoints();
  }

  const SamplerConfig& cfg() const { return cfg_; }
  LatentState& x() { return x_; }
  RunTrace& trace() { return trace_; }

  bool is_checkpoint(int t) const {
    return std::find(checkpoints_.begin(), checkpoints_.end(), t) != checkpoints_.end();
  }

  void record(int t, OpKind kind, const LatentState* state = nullptr) {
    TraceRecord r;
    r.t = t;
    r.kind = kind;
    r.ping_counter = ping_cursor_.counter();
    if (state) r.digest = latent_digest(*state);
    trace_.add(std::move(r));
  }

  void record(TraceRecord r) {
    r.ping_counter = ping_cursor_.counter();
    trace_.add(std::move(r));
  }

  NoiseDraw ping_noise() {
    NoiseDraw n = draw_noise(ping_cursor_, cfg_.seed, x_.x.rows(), x_.x.dims());
    if (cfg_.ping_noise_scale != 1.0) {
      for (double& v : n.eps.flat()) v *= cfg_.ping_noise_scale;
    }
    return n;
  }

  void regular_step(const Condition& cond) {
    x_ = reverse_step(x_, cond, den_, s_);
    record(x_.t, OpKind::kReverse, &x_);
  }

  template <typename Body>
  SampleResult drive(Body&& body) {
    try {
      body();
    } catch (const SamplingAborted&) {
      throw;
    } catch (const Error& e) {
      throw SamplingAborted(e.what(), trace_);
    }
    return {x_, std::move(trace_)};
  }

  const SamplingContext& ctx_;
  SamplerConfig cfg_;
  const NoiseSchedule& s_;
  const Denoiser& den_;

 private:
  Philox rng_;
  StreamCursor ping_cursor_;
  LatentState x_;
  RunTrace trace_;
  std::vector<int> checkpoints_;
};

}  // namespace

SampleResult sample_vanilla(const SamplingContext& ctx) {
  Run run(ctx, Method::kVanilla);
  return run.drive([&] {
    while (run.x().t > 0) run.regular_step(ctx.condition);
  });
}

SampleResult sample_zigzag(const SamplingContext& ctx) {
  Run run(ctx, Method::kZigzag);
  return run.drive([&] {
    while (run.x().t > 0) {
      run.regular_step(ctx.condition);
      const int checkpoint = run.x().t + 1;
      if (!run.is_checkpoint(checkpoint)) continue;
      TraceRecord r;
      NoiseDraw noise = run.ping_noise();
      r.noise = noise.source;
      run.x() = zigzag_step(run.x(), ctx.condition, run.den_, run.s_, noise);
      r.t = run.x().t;
      r.kind = OpKind::kZigzag;
      r.digest = latent_digest(run.x());
      run.record(std::move(r));
    }
  });
}

SampleResult sample_ppad(const SamplingContext& ctx, Critic& critic) {
  Run run(ctx, Method::kPpad);
  const SamplerConfig& cfg = run.cfg();
  const Condition& original = ctx.condition;

  return run.drive([&] {
    Condition active = original;
    std::optional<Condition> next_step_only;
    bool latched = false;

    while (run.x().t > 0) {
      if (next_step_only) {
        run.regular_step(*next_step_only);
        next_step_only.reset();
      } else {
        run.regular_step(active);
      }

      const int checkpoint = run.x().t + 1;
      // A correction ends with an ahead step from t-1, which needs t-1 >= 2.
      if (latched || !run.is_checkpoint(checkpoint) || run.x().t < 2) continue;

      const Sketch sketch = cfg.lookahead ? preview(run.x(), active, run.den_, run.s_, cfg.gamma)
                                          : preview_fixed(run.x(), active, run.den_, run.s_, 1);
      {
        TraceRecord r;
        r.t = run.x().t;
        r.kind = OpKind::kPreview;
        r.digest = latent_digest(sketch.x0);
        r.note = "k=" + std::to_string(sketch.depth) + (sketch.clamped ? " clamped" : "");
        run.record(std::move(r));
      }

      Critique critique;
      try {
        critique = critic.check(sketch.x0, ctx.prompt, checkpoint);
      } catch (const Error& e) {
        TraceRecord r = make_record(run.x().t, OpKind::kFallback);
        r.note = std::string("check: ") + e.what();
        run.record(std::move(r));
        continue;
      }
      {
        TraceRecord r = make_record(run.x().t, OpKind::kCheck);
        r.score = critique.score;
        run.record(std::move(r));
      }
      if (critique.score >= cfg.tau_stop) {
        latched = true;
        run.record(run.x().t, OpKind::kEarlyStop);
        continue;
      }

      Condition corrected;
      try {
        Correction corr = critic.synthesize(critique, ctx.prompt, active, checkpoint);
        corrected = compose(corr.refined, corr.omissions, cfg.lambda);
        TraceRecord r = make_record(run.x().t, OpKind::kSynthesize);
        r.correction = std::move(corr);
        run.record(std::move(r));
      } catch (const Error& e) {
        TraceRecord r = make_record(run.x().t, OpKind::kFallback);
        r.note = std::string("synthesize: ") + e.what();
        run.record(std::move(r));
        continue;
      }

      if (cfg.injection == Injection::kNextStep) {
        next_step_only = corrected;
        continue;
      }

      // Ping (t-1 -> t), Pong (t -> t-1 under the corrected condition),
      // Ahead (t-1 -> t-2 under the original condition).
      LatentState tilde_t;
      TraceRecord ping_rec = make_record(checkpoint, OpKind::kPing);
      LatentState tilde_prev;
      if (cfg.noise_placement == NoisePlacement::kPing) {
        NoiseDraw noise = run.ping_noise();
        ping_rec.noise = noise.source;
        tilde_t = ping(run.x(), run.s_, noise);
        ping_rec.digest = latent_digest(tilde_t);
        run.record(std::move(ping_rec));
        tilde_prev = pong(tilde_t, corrected, run.den_, run.s_);
      } else {
        tilde_t = ping_deterministic(run.x(), active, run.den_, run.s_);
        ping_rec.digest = latent_digest(tilde_t);
        run.record(std::move(ping_rec));
        NoiseDraw noise = run.ping_noise();
        tilde_prev = pong_stochastic(tilde_t, corrected, run.den_, run.s_, noise);
      }
      run.record(tilde_prev.t, OpKind::kPong, &tilde_prev);
      run.x() = ahead(tilde_prev, original, run.den_, run.s_);
      run.record(run.x().t, OpKind::kAhead, &run.x());
      if (cfg.persist_correction) active = corrected;
    }
  });
}

SampleResult sample(const SamplingContext& ctx, Critic* critic) {
  switch (ctx.config.method) {
    case Method::kVanilla:
      return sample_vanilla(ctx);
    case Method::kZigzag:
      return sample_zigzag(ctx);
    case Method::kPpad:
      if (!critic) throw ContractError("sample: ppad needs a critic");
      return sample_ppad(ctx, *critic);
  }
  return sample_vanilla(ctx);
}

}  // namespace pingpong
