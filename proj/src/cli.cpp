// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include "pingpong/cli.hpp"

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pingpong/analysis.hpp"
#include "pingpong/config.hpp"
#include "pingpong/stub_server.hpp"

namespace pingpong {
namespace {

namespace fs = std::filesystem;

/// Config flags shared by the subcommands that build an engine.
struct ConfigFlags {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps, t_hi, t_lo, stride, batch, workers;
  std::optional<double> gamma, tau_stop, lambda, kappa, beta_start, beta_end;
  std::optional<std::string> critic, critic_endpoint, rounds, denoiser, denoiser_endpoint, injection, placement;
  bool no_lookahead = false;
  bool correct_condition = false;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--T", steps, "Number of diffusion steps");
    app->add_option("--beta-start", beta_start);
    app->add_option("--beta-end", beta_end);
    app->add_option("--t-hi", t_hi, "Upper end of the correction interval");
    app->add_option("--t-lo", t_lo, "Lower end of the correction interval");
    app->add_option("--delta", stride, "Correction stride");
    app->add_option("--gamma", gamma, "SNR threshold of the lookahead gate");
    app->add_option("--tau-stop", tau_stop, "Early-stop threshold");
    app->add_option("--lambda", lambda, "Suppression strength");
    app->add_option("--kappa", kappa, "Boost rate of missing components");
    app->add_option("--batch", batch, "Points per sample");
    app->add_option("--workers", workers, "Worker threads (0: all cores)");
    app->add_option("--critic", critic, "oracle | consistent | mllm");
    app->add_option("--critic-endpoint", critic_endpoint);
    app->add_option("--rounds", rounds, "1r | 2r | 3r | 4r");
    app->add_option("--denoiser", denoiser, "analytic | remote");
    app->add_option("--denoiser-endpoint", denoiser_endpoint);
    app->add_option("--injection", injection, "ping-pong-ahead | next-step");
    app->add_option("--noise-placement", placement, "ping | pong");
    app->add_flag("--no-lookahead", no_lookahead, "Inspect the one-step prediction instead of the sketch");
    app->add_flag("--correct-condition", correct_condition, "Start from the correctly encoded prompt");
  }

  RunConfig build() const {
    RunConfig c = path.empty() ? benchmark_config() : load_config(path);
    apply_environment(c);
    if (correct_condition) c.initial_condition.reset();
    if (seed) c.sampler.seed = *seed;
    if (steps) c.schedule.steps = *steps;
    if (beta_start) c.schedule.beta_start = *beta_start;
    if (beta_end) c.schedule.beta_end = *beta_end;
    if (t_hi) c.sampler.t_hi = *t_hi;
    if (t_lo) c.sampler.t_lo = *t_lo;
    if (stride) c.sampler.stride = *stride;
    if (gamma) c.sampler.gamma = *gamma;
    if (tau_stop) c.sampler.tau_stop = *tau_stop;
    if (lambda) c.sampler.lambda = *lambda;
    if (kappa) c.sampler.kappa = *kappa;
    if (batch) {
      if (*batch < 1) throw RangeError("batch: must be >= 1");
      c.sampler.batch = static_cast<std::size_t>(*batch);
    }
    if (workers) c.workers = *workers;
    if (critic) c.critic.kind = parse_critic_kind(*critic);
    if (critic_endpoint) c.critic.endpoint = *critic_endpoint;
    if (rounds) c.critic.rounds = parse_round_mode(*rounds);
    if (denoiser) c.denoiser.kind = parse_denoiser_kind(*denoiser);
    if (denoiser_endpoint) c.denoiser.endpoint = *denoiser_endpoint;
    if (injection) c.sampler.injection = parse_injection(*injection);
    if (placement) c.sampler.noise_placement = parse_noise_placement(*placement);
    if (no_lookahead) c.sampler.lookahead = false;
    return c.resolved();
  }
};

/// Thrown for bad configuration so that it maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig build_config(const ConfigFlags& flags) {
  try {
    return flags.build();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string header_line(const RunConfig& c) {
  nlohmann::json j = c;
  return std::string("# pingpong ") + kVersion + " config=" + j.dump() + "\n";
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_file(const std::string& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RangeError("output: cannot write '" + path + "'");
  out << text;
  if (!out) throw RangeError("output: write to '" + path + "' failed");
}

/// run7.jsonl -> run7.final.json in the same directory.
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::ordered_json final_json(const RunConfig& c, Method method, const SampleResult& res) {
  nlohmann::ordered_json j;
  j["header"] = {{"type", "final"}, {"version", kVersion}, {"method", to_string(method)},
                 {"config", nlohmann::json(c)}};
  j["t"] = res.final.t;
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < res.final.x.rows(); ++i) {
    const auto row = res.final.x.row(i);
    points.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["points"] = points;
  j["metrics"] = nlohmann::json(alignment_metrics(res.final, c.prompt, c.world));
  j["latent_digest"] = hex64(latent_digest(res.final));
  j["trace_digest"] = hex64(res.trace.digest());
  return j;
}

int cmd_sample(const ConfigFlags& flags, const std::string& method_name, const std::string& out_path,
               const std::string& final_path, const std::string& preview_path, int preview_size, std::ostream& out) {
  RunConfig c = build_config(flags);
  Method method;
  try {
    method = parse_method(method_name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  c.sampler.method = method;
  const Engine engine(c);
  ensure_parent(out_path);
  const std::string final_file = final_path.empty() ? sibling(out_path, ".final.json") : final_path;
  try {
    SampleResult res = engine.run(method, c.sampler.seed);
    res.trace.write_jsonl(out_path);
    write_file(final_file, final_json(engine.config(), method, res).dump(2) + "\n");
    if (!preview_path.empty()) write_file(preview_path, render_preview(res.final, c.world, preview_size));
    const AlignmentMetrics m = alignment_metrics(res.final, c.prompt, c.world);
    out << "method=" << to_string(method) << " seed=" << c.sampler.seed << " success=" << m.success
        << " corrections=" << res.trace.count(OpKind::kSynthesize) << " fallbacks=" << res.trace.count(OpKind::kFallback)
        << " digest=" << hex64(res.trace.digest()) << "\n";
    return kExitOk;
  } catch (const SamplingAborted& e) {
    e.partial().write_jsonl(out_path);
    throw;
  }
}

int cmd_compare(const ConfigFlags& flags, const std::string& methods_text, int runs, std::uint64_t first_seed,
                const std::string& out_path, std::ostream& out) {
  const RunConfig c = build_config(flags);
  std::vector<Method> methods;
  try {
    for (const auto& m : split_list(methods_text)) methods.push_back(parse_method(m));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (methods.empty()) throw UsageError("methods: empty list");
  const Engine engine(c);
  const auto rows = compare(engine, methods, runs, first_seed, resolve_workers(c.workers));
  const std::string csv = header_line(engine.config()) + compare_csv(rows, c.world.components());
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file(out_path, csv);
  }
  for (Method m : methods) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", success_rate(rows, m));
    (out_path.empty() ? std::cerr : out) << "success_rate " << to_string(m) << " " << buf << "\n";
  }
  return kExitOk;
}

int cmd_verify(const ConfigFlags& flags, const std::string& theorem, int trials, double tol,
               const std::string& deltas_text, const std::string& modes_text, const std::string& out_path,
               bool details, std::ostream& out) {
  const RunConfig c = build_config(flags);
  if (theorem != "1" && theorem != "2" && theorem != "all") throw UsageError("theorem: expected 1, 2 or all");
  const Engine engine(c);
  const int workers = resolve_workers(c.workers);
  nlohmann::ordered_json report;
  report["header"] = {{"type", "verify"}, {"version", kVersion}, {"config", nlohmann::json(engine.config())}};
  nlohmann::json reports = nlohmann::json::array();
  bool pass = true;

  if (theorem == "2" || theorem == "all") {
    Theorem2Options o;
    o.trials = trials > 0 ? trials : 1000;
    o.tol = tol;
    o.seed = c.sampler.seed;
    o.lambda = c.sampler.lambda;
    o.workers = workers;
    const auto start = std::chrono::steady_clock::now();
    const TheoremReport r = verify_theorem2(engine.schedule(), c.world, o);
    nlohmann::json j = report_json(r, details);
    j["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    reports.push_back(j);
    pass = pass && r.pass;
  }
  if (theorem == "1" || theorem == "all") {
    std::vector<double> deltas;
    std::vector<PerturbationMode> modes;
    try {
      for (const auto& d : split_list(deltas_text)) deltas.push_back(std::stod(d));
      for (const auto& m : split_list(modes_text)) modes.push_back(parse_perturbation_mode(m));
    } catch (const std::exception& e) {
      throw UsageError(std::string("verify: ") + e.what());
    }
    for (double delta : deltas) {
      for (PerturbationMode mode : modes) {
        Theorem1Options o;
        o.delta = delta;
        o.mode = mode;
        o.trials = trials > 0 ? trials : 100;
        o.seed = c.sampler.seed;
        o.batch = c.sampler.batch;
        o.lambda = c.sampler.lambda;
        o.workers = workers;
        const auto start = std::chrono::steady_clock::now();
        const TheoremReport r = verify_theorem1(engine.schedule(), c.world, c.condition(), o);
        nlohmann::json j = report_json(r, details);
        j["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        reports.push_back(j);
        pass = pass && r.pass;
      }
    }
  }
  report["reports"] = reports;
  report["pass"] = pass;
  if (out_path.empty()) {
    out << report.dump(2) << "\n";
  } else {
    write_file(out_path, report.dump(2) + "\n");
    for (const auto& r : reports) {
      out << "theorem " << r["theorem"].get<int>() << " " << r["params"].dump() << " pass=" << r["pass"] << "\n";
    }
  }
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_ablate(const ConfigFlags& flags, int runs, std::uint64_t first_seed, const std::string& out_path,
               std::ostream& out) {
  const RunConfig c = build_config(flags);
  const Engine engine(c);
  const auto rows = ablation_harness(engine, runs, first_seed, resolve_workers(c.workers));
  const std::string csv = header_line(engine.config()) + ablation_csv(rows);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file(out_path, csv);
    out << ablation_csv(rows);
  }
  return kExitOk;
}

int cmd_dump_schedule(const ConfigFlags& flags, const std::string& out_path, std::ostream& out) {
  const RunConfig c = build_config(flags);
  const NoiseSchedule s = build_schedule(c.schedule.kind, c.schedule.steps, c.schedule.beta_start, c.schedule.beta_end);
  const std::string csv = header_line(c) + schedule_csv(s);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file(out_path, csv);
  }
  return kExitOk;
}

StubServer* g_stub = nullptr;

void on_signal(int) {
  if (g_stub) g_stub->shutdown();
}

int cmd_stub(const StubOptions& options, std::ostream& out) {
  StubServer server(options);
  g_stub = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  out << "listening on " << server.endpoint() << std::endl;
  server.wait();
  g_stub = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-corrected diffusion sampling on Gaussian-mixture worlds", "pingpong"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::function<int()> action;

  ConfigFlags sample_flags;
  std::string method = "ppad", out_path, final_path, preview_path;
  int preview_size = 128;
  auto* sample_cmd = app.add_subcommand("sample", "Run one sample and write its trace");
  sample_flags.attach(sample_cmd);
  sample_cmd->add_option("--method", method, "vanilla | zigzag | ppad");
  sample_cmd->add_option("--out", out_path, "Trace JSONL path")->required();
  sample_cmd->add_option("--final", final_path, "Final-sample JSON path (default: <out>.final.json)");
  sample_cmd->add_option("--preview", preview_path, "Write a PPM raster of the final sample");
  sample_cmd->add_option("--preview-size", preview_size)->check(CLI::Range(64, 4096));
  sample_cmd->callback([&] {
    action = [&] { return cmd_sample(sample_flags, method, out_path, final_path, preview_path, preview_size, out); };
  });

  ConfigFlags compare_flags;
  std::string methods = "vanilla,zigzag,ppad", compare_out;
  int compare_runs = 100;
  std::uint64_t compare_first = 0;
  auto* compare_cmd = app.add_subcommand("compare", "Seeded runs per method; metrics CSV");
  compare_flags.attach(compare_cmd);
  compare_cmd->add_option("--methods", methods, "Comma-separated methods");
  compare_cmd->add_option("--runs", compare_runs, "Runs per method")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--first-seed", compare_first);
  compare_cmd->add_option("--out", compare_out, "CSV path (default: stdout)");
  compare_cmd->callback([&] {
    action = [&] { return cmd_compare(compare_flags, methods, compare_runs, compare_first, compare_out, out); };
  });

  ConfigFlags verify_flags;
  std::string theorem = "all", deltas = "0.01,0.1", modes = "constant,random", verify_out;
  int trials = 0;
  double tol = 1e-9;
  bool details = false;
  auto* verify_cmd = app.add_subcommand("verify", "Check the decomposition identity and the error bound");
  verify_flags.attach(verify_cmd);
  verify_cmd->add_option("--theorem", theorem, "1 | 2 | all");
  verify_cmd->add_option("--trials", trials, "Trials per check (default 1000 for 2, 100 for 1)");
  verify_cmd->add_option("--tol", tol, "Residual tolerance of the decomposition");
  verify_cmd->add_option("--deltas", deltas, "Error budgets for the bound");
  verify_cmd->add_option("--modes", modes, "Perturbation modes: constant,random");
  verify_cmd->add_option("--out", verify_out, "Report JSON path (default: stdout)");
  verify_cmd->add_flag("--details", details, "Include per-trial results");
  verify_cmd->callback([&] {
    action = [&] { return cmd_verify(verify_flags, theorem, trials, tol, deltas, modes, verify_out, details, out); };
  });

  ConfigFlags ablate_flags;
  int ablate_runs = 100;
  std::uint64_t ablate_first = 0;
  std::string ablate_out;
  auto* ablate_cmd = app.add_subcommand("ablate", "Module ablation table");
  ablate_flags.attach(ablate_cmd);
  ablate_cmd->add_option("--runs", ablate_runs)->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--first-seed", ablate_first);
  ablate_cmd->add_option("--out", ablate_out, "CSV path (default: stdout)");
  ablate_cmd->callback([&] {
    action = [&] { return cmd_ablate(ablate_flags, ablate_runs, ablate_first, ablate_out, out); };
  });

  ConfigFlags schedule_flags;
  std::string schedule_out;
  auto* schedule_cmd = app.add_subcommand("dump-schedule", "Per-step coefficient CSV");
  schedule_flags.attach(schedule_cmd);
  schedule_cmd->add_option("--out", schedule_out, "CSV path (default: stdout)");
  schedule_cmd->callback([&] { action = [&] { return cmd_dump_schedule(schedule_flags, schedule_out, out); }; });

  StubOptions stub;
  std::string verdict = "inconsistent", denoise = "zero";
  auto* stub_cmd = app.add_subcommand("stub-critic", "Deterministic /critic and /denoise stub server");
  stub_cmd->add_option("--host", stub.host);
  stub_cmd->add_option("--port", stub.port)->check(CLI::Range(0, 65535));
  stub_cmd->add_option("--verdict", verdict)->check(CLI::IsMember({"consistent", "inconsistent"}));
  stub_cmd->add_option("--denoise", denoise)->check(CLI::IsMember({"zero", "wrong-shape"}));
  stub_cmd->add_option("--die-after", stub.die_after, "Stop after this many /critic requests");
  stub_cmd->callback([&] {
    action = [&] {
      stub.verdict = verdict == "consistent" ? StubVerdict::kConsistent : StubVerdict::kInconsistent;
      stub.denoise = denoise == "zero" ? StubDenoise::kZero : StubDenoise::kWrongShape;
      return cmd_stub(stub, out);
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace pingpong
