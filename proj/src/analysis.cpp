// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "pingpong/critic.hpp"
#include "pingpong/operators.hpp"
#include "pingpong/rng.hpp"

namespace pingpong {

void to_json(nlohmann::json& j, const TheoremTrial& t) {
  j = {{"index", t.index}, {"pass", t.pass}};
  if (t.t > 0) {
    j["t"] = t.t;
    j["residual"] = t.residual;
  } else {
    j["e0"] = t.e0;
    j["recursion_violations"] = t.recursion_violations;
    j["worst_recursion_slack"] = t.worst_recursion_slack;
  }
}

nlohmann::json report_json(const TheoremReport& r, bool with_details) {
  nlohmann::json j = {{"theorem", r.theorem}, {"label", r.label}, {"trials", r.trials}, {"params", r.params}};
  if (r.theorem == 2) {
    j["tolerance"] = r.tolerance;
    j["max_residual"] = r.max_residual;
  } else {
    j["max_e0"] = r.max_e0;
    j["bound"] = r.bound;
    j["margin"] = r.margin;
    j["bound_ok"] = r.bound_ok;
    j["recursion_ok"] = r.recursion_ok;
    j["gamma_ok"] = r.gamma_ok;
  }
  j["pass"] = r.pass;
  if (with_details) j["details"] = r.details;
  return j;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

constexpr std::uint64_t kBlocksPerTrial = 1u << 16;

Condition random_condition(StreamCursor& cur, std::size_t K) {
  std::vector<double> u(2 * K);
  cur.uniforms(u);
  Condition c{std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t k = 0; k < K; ++k) {
    c.weights[k] = u[k] + 0.1;
    c.suppress[k] = 0.1 * u[K + k];
  }
  c.weights = normalize_weights(std::move(c.weights), "random_condition");
  return c;
}

Points random_points(StreamCursor& cur, std::size_t rows, std::size_t dims, double scale) {
  Points p(rows, dims);
  cur.normals(p.flat());
  for (double& v : p.flat()) v *= scale;
  return p;
}

}  // namespace

TheoremReport verify_theorem2(std::shared_ptr<const NoiseSchedule> s, const GMMWorld& world,
                              const Theorem2Options& o) {
  if (o.trials < 1) throw RangeError("trials: must be >= 1");
  if (s->steps() < 3) throw RangeError("T: the decomposition needs T >= 3");
  world.validate();
  const AnalyticDenoiser den(world, s, o.lambda);
  const Philox rng(o.seed);
  const std::size_t K = world.components();
  const std::size_t D = world.dims();

  TheoremReport r;
  r.theorem = 2;
  r.label = "ping-pong-ahead decomposition";
  r.trials = o.trials;
  r.tolerance = o.tol;
  r.params = {{"trials", o.trials}, {"tol", o.tol}, {"seed", o.seed}, {"batch", o.batch},
              {"zero_noise", o.zero_noise}, {"T", s->steps()}};
  r.details.resize(o.trials);

  parallel_for(o.trials, o.workers, [&](int i) {
    StreamCursor cur(rng, static_cast<std::uint64_t>(Stream::kTest), static_cast<std::uint64_t>(i) * kBlocksPerTrial);
    std::vector<double> u(1);
    cur.uniforms(u);
    const int t = 3 + std::min(s->steps() - 3, static_cast<int>(u[0] * (s->steps() - 2)));
    const Condition c = random_condition(cur, K);
    const Condition c_tilde = random_condition(cur, K);
    // Spread x_{t-1} around its marginal scale so the mixture posterior is not trivial.
    const LatentState x{random_points(cur, o.batch, D, 3.0), t - 1};
    NoiseDraw eps = draw_noise(cur, o.seed, o.batch, D);
    if (o.zero_noise) eps = injected_noise(Points(o.batch, D));

    const LatentState x_tilde_t = ping(x, *s, eps);
    const LatentState x_tilde_prev = pong(x_tilde_t, c_tilde, den, *s);
    const LatentState x_prev2 = ahead(x_tilde_prev, c, den, *s);

    const EtaCoeffs e = s->eta(t);
    const Points m_prev = den.predict(x_tilde_prev, c);
    const Points m_t = den.predict(x_tilde_t, c_tilde);
    double residual = 0.0;
    for (std::size_t j = 0; j < x.x.flat().size(); ++j) {
      const double decomposed = e.eta1 * x.x.flat()[j] + e.eta2 * m_prev.flat()[j] + e.eta3 * m_t.flat()[j] +
                                e.eta4 * eps.eps.flat()[j];
      residual = std::max(residual, std::abs(x_prev2.x.flat()[j] - decomposed));
    }
    TheoremTrial& tr = r.details[i];
    tr.index = i;
    tr.t = t;
    tr.residual = residual;
    tr.pass = residual <= o.tol;
  });

  r.pass = true;
  for (const auto& tr : r.details) {
    r.max_residual = std::max(r.max_residual, tr.residual);
    r.pass = r.pass && tr.pass;
  }
  return r;
}

TheoremReport verify_theorem1(std::shared_ptr<const NoiseSchedule> s, const GMMWorld& world, const Condition& cond,
                              const Theorem1Options& o) {
  if (o.trials < 1) throw RangeError("trials: must be >= 1");
  if (!(o.delta >= 0.0)) throw RangeError("delta: must be >= 0");
  world.validate();
  cond.validate();
  const int T = s->steps();

  double floor = o.snr_floor;
  if (floor == 0.0) floor = s->min_snr();
  for (int t = 1; t <= T; ++t) {
    if (!(s->snr(t) > 0.0) || s->snr(t) < floor) {
      std::ostringstream msg;
      msg << "snr floor: SNR(t=" << t << ") = " << s->snr(t) << " violates the floor " << floor;
      throw ContractError(msg.str());
    }
  }
  if (!(floor > 0.0)) throw ContractError("snr floor: must be > 0");

  TheoremReport r;
  r.theorem = 1;
  r.label = "bounded error accumulation";
  r.trials = o.trials;
  double sum_gamma = 0.0;
  const double gamma_cap = std::sqrt(1.0 / floor);
  for (int t = 1; t <= T; ++t) {
    sum_gamma += s->gamma(t);
    const double per_step_cap = std::sqrt((1.0 - s->alpha_bar(t)) / s->alpha_bar(t));
    if (s->gamma(t) > gamma_cap || s->gamma(t) > per_step_cap * (1.0 + 1e-12)) r.gamma_ok = false;
  }
  r.bound = o.delta * sum_gamma;
  r.params = {{"delta", o.delta}, {"mode", to_string(o.mode)}, {"trials", o.trials}, {"seed", o.seed},
              {"batch", o.batch}, {"snr_floor", floor}, {"sum_gamma", sum_gamma}, {"T", T}};
  r.details.resize(o.trials);

  auto ideal = std::make_shared<const AnalyticDenoiser>(world, s, o.lambda);
  parallel_for(o.trials, o.workers, [&](int i) {
    const std::uint64_t trial_seed = o.seed + static_cast<std::uint64_t>(i);
    PerturbedDenoiser noisy(ideal, o.delta, o.mode, trial_seed);
    LatentState x_star = initial_latent(trial_seed, o.batch, world.dims(), T);
    LatentState x = x_star;
    std::vector<double> e(o.batch, 0.0);
    TheoremTrial& tr = r.details[i];
    tr.index = i;
    tr.worst_recursion_slack = std::numeric_limits<double>::infinity();
    while (x.t > 0) {
      const int t = x.t;
      x_star = reverse_step(x_star, cond, *ideal, *s);
      x = reverse_step(x, cond, noisy, *s);
      const double growth = std::sqrt(s->alpha_bar(t - 1) / s->alpha_bar(t));
      for (std::size_t p = 0; p < o.batch; ++p) {
        double sq = 0.0;
        for (std::size_t d = 0; d < world.dims(); ++d) {
          const double diff = x.x.at(p, d) - x_star.x.at(p, d);
          sq += diff * diff;
        }
        const double next = std::sqrt(sq);
        const double rhs = growth * e[p] + s->gamma(t) * o.delta;
        const double slack = rhs - next;
        tr.worst_recursion_slack = std::min(tr.worst_recursion_slack, slack);
        if (slack < -kRecursionSlack * std::max(1.0, rhs)) ++tr.recursion_violations;
        e[p] = next;
      }
    }
    tr.e0 = *std::max_element(e.begin(), e.end());
    tr.pass = tr.e0 <= r.bound && tr.recursion_violations == 0;
  });

  for (const auto& tr : r.details) {
    r.max_e0 = std::max(r.max_e0, tr.e0);
    if (tr.e0 > r.bound) r.bound_ok = false;
    if (tr.recursion_violations > 0) r.recursion_ok = false;
  }
  r.margin = r.bound - r.max_e0;
  r.pass = r.bound_ok && r.recursion_ok && r.gamma_ok;
  return r;
}

double sft_loss(const Points& eps_true, const Points& eps_pred) {
  if (!eps_true.same_shape(eps_pred)) throw ShapeError("sft_loss: batches have different shapes");
  if (eps_true.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < eps_true.flat().size(); ++j) {
    const double d = eps_pred.flat()[j] - eps_true.flat()[j];
    total += d * d;
  }
  return total / static_cast<double>(eps_true.rows());
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void require_finite(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw RangeError("dpo_loss: scores must be finite");
}

}  // namespace

double dpo_loss(double score_pos, double score_neg) {
  require_finite(score_pos, score_neg);
  return softplus(score_neg - score_pos);
}

double dpo_loss_grad_pos(double score_pos, double score_neg) {
  require_finite(score_pos, score_neg);
  // -(1 - softmax+) = -sigmoid(s- - s+)
  const double z = score_neg - score_pos;
  const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return -sig;
}

AlignmentMetrics alignment_metrics(const LatentState& final, const Prompt& p, const GMMWorld& world) {
  AlignmentMetrics m;
  m.coverage = occupancy(final, world);
  m.success = oracle_check(final, p, world).score >= 1.0 ? 1 : 0;
  for (const auto& req : p.required) {
    const double obs = m.coverage[req.id];
    m.fractions.push_back({req.id, "required", req.fraction, obs, std::abs(obs - req.fraction) <= p.tolerance + 1e-12});
  }
  for (int f : p.forbidden) {
    const double obs = m.coverage[f];
    m.fractions.push_back({f, "forbidden", 0.0, obs, obs <= p.tolerance + 1e-12});
  }
  return m;
}

void to_json(nlohmann::json& j, const AlignmentMetrics& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& f : m.fractions) {
    rows.push_back({{"component", f.component}, {"role", f.role}, {"target", f.target}, {"observed", f.observed},
                    {"pass", f.pass}});
  }
  j = {{"success", m.success}, {"coverage", m.coverage}, {"fractions", rows}};
}

std::vector<CompareRow> compare(const Engine& engine, const std::vector<Method>& methods, int runs,
                                std::uint64_t first_seed, int workers) {
  if (runs < 1) throw RangeError("runs: must be >= 1");
  const int n = static_cast<int>(methods.size()) * runs;
  std::vector<CompareRow> rows(n);
  parallel_for(n, workers, [&](int i) {
    const Method method = methods[i / runs];
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i % runs);
    SampleResult res = engine.run(method, seed);
    CompareRow& row = rows[i];
    row.method = method;
    row.seed = seed;
    row.metrics = alignment_metrics(res.final, engine.config().prompt, engine.config().world);
    row.corrections = static_cast<int>(res.trace.count(OpKind::kSynthesize));
    row.fallbacks = static_cast<int>(res.trace.count(OpKind::kFallback));
    row.digest = res.trace.digest();
  });
  return rows;
}

double success_rate(const std::vector<CompareRow>& rows, Method method) {
  int n = 0;
  int ok = 0;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    ++n;
    ok += r.metrics.success;
  }
  return n == 0 ? 0.0 : static_cast<double>(ok) / n;
}

std::string compare_csv(const std::vector<CompareRow>& rows, std::size_t components) {
  std::ostringstream out;
  out << "method,seed,success";
  for (std::size_t k = 0; k < components; ++k) out << ",coverage_" << k;
  out << ",corrections,fallbacks,digest\n";
  char buf[32];
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.seed << ',' << r.metrics.success;
    for (double c : r.metrics.coverage) {
      std::snprintf(buf, sizeof buf, "%.6f", c);
      out << ',' << buf;
    }
    out << ',' << r.corrections << ',' << r.fallbacks << ',' << hex64(r.digest) << '\n';
  }
  return out.str();
}

std::vector<AblationRow> ablation_harness(const Engine& engine, int runs, std::uint64_t first_seed, int workers) {
  if (runs < 1) throw RangeError("runs: must be >= 1");
  std::vector<AblationRow> rows = {
      {"none", false, false, false},
      {"sck-only", true, false, false},
      {"sck+lkg", true, true, false},
      {"full", true, true, true},
  };
  for (auto& row : rows) {
    std::vector<int> success(runs, 0);
    parallel_for(runs, workers, [&](int i) {
      SamplerConfig cfg = engine.config().sampler;
      cfg.seed = first_seed + static_cast<std::uint64_t>(i);
      cfg.method = row.critic ? Method::kPpad : Method::kVanilla;
      cfg.lookahead = row.lookahead;
      cfg.injection = row.ppa ? Injection::kPingPongAhead : Injection::kNextStep;
      SampleResult res = engine.run(cfg);
      success[i] = alignment_metrics(res.final, engine.config().prompt, engine.config().world).success;
    });
    row.runs = runs;
    for (int v : success) row.successes += v;
    row.success_rate = static_cast<double>(row.successes) / runs;
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "row,critic,lookahead,ppa,successes,runs,success_rate\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.success_rate);
    out << r.name << ',' << r.critic << ',' << r.lookahead << ',' << r.ppa << ',' << r.successes << ',' << r.runs
        << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace pingpong
