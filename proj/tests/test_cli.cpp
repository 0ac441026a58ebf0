// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "helpers.hpp"
#include "pingpong/cli.hpp"
#include "pingpong/stub_server.hpp"

using namespace pingpong;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Invocation r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pingpong_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t data_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sample is reproducible") {
    const fs::path dir = scratch("sample");
    const auto a = invoke({"sample", "--seed", "3", "--out", (dir / "a.jsonl").string()});
    const auto b = invoke({"sample", "--seed", "3", "--out", (dir / "b.jsonl").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const std::string ta = testing::read_file((dir / "a.jsonl").string());
    CHECK(ta == testing::read_file((dir / "b.jsonl").string()));
    CHECK(testing::read_file((dir / "a.final.json").string()) == testing::read_file((dir / "b.final.json").string()));
    const auto header = nlohmann::json::parse(first_line(ta));
    CHECK(header.at("type") == "header");
    CHECK(header.at("method") == "ppad");
    CHECK(header.at("provenance").contains("world"));
    const auto final = nlohmann::json::parse(testing::read_file((dir / "a.final.json").string()));
    CHECK(final.at("header").at("type") == "final");
  }

  TEST_CASE("compare writes one row per run") {
    const fs::path dir = scratch("compare");
    const auto r = invoke({"compare", "--methods", "vanilla,ppad", "--runs", "100", "--out", (dir / "c.csv").string()});
    REQUIRE(r.code == 0);
    const std::string csv = testing::read_file((dir / "c.csv").string());
    CHECK(csv.rfind("# pingpong ", 0) == 0);
    CHECK(data_lines(csv) == 201);
    CHECK(r.out.find("ppad") != std::string::npos);
  }

  TEST_CASE("verify exit codes") {
    const fs::path dir = scratch("verify");
    const auto two = invoke({"verify", "--theorem", "2", "--trials", "100", "--out", (dir / "v2.json").string()});
    CHECK(two.code == 0);
    const auto report = nlohmann::json::parse(testing::read_file((dir / "v2.json").string()));
    CHECK(report.at("header").at("type") == "verify");
    CHECK(report.at("pass") == true);

    // The bound does not hold on the multimodal benchmark world.
    const auto one = invoke({"verify", "--theorem", "1", "--trials", "5", "--deltas", "0.1", "--modes", "constant",
                             "--out", (dir / "v1.json").string()});
    CHECK(one.code == 3);
  }

  TEST_CASE("ablate and dump-schedule carry the header") {
    const auto ab = invoke({"ablate", "--runs", "5"});
    CHECK(ab.code == 0);
    CHECK(ab.out.rfind("# pingpong ", 0) == 0);
    CHECK(data_lines(ab.out) == 5);
    const auto sch = invoke({"dump-schedule", "--T", "10"});
    CHECK(sch.code == 0);
    CHECK(sch.out.rfind("# pingpong ", 0) == 0);
    CHECK(data_lines(sch.out) == 11);
  }

  TEST_CASE("usage errors exit 2") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"sample"}).code == 2);
    CHECK(invoke({"sample", "--out", "/tmp/x.jsonl", "--bogus"}).code == 2);
    CHECK(invoke({"sample", "--out", "/tmp/x.jsonl", "--T", "1"}).code == 2);
    CHECK(invoke({"sample", "--out", "/tmp/x.jsonl", "--method", "ddpm"}).code == 2);
    CHECK(invoke({"sample", "--out", "/tmp/x.jsonl", "--tau-stop", "0"}).code == 2);
    CHECK(invoke({"compare", "--runs", "0"}).code == 2);
    const auto bad = invoke({"sample", "--out", "/tmp/x.jsonl", "--t-hi", "5", "--t-lo", "9"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("t_lo") != std::string::npos);
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"--version"}).code == 0);
  }

  TEST_CASE("mllm critic against a dying sidecar still completes") {
    StubOptions so;
    so.die_after = 1;
    StubServer stub(so);
    stub.start();
    const fs::path dir = scratch("robust");
    const auto r = invoke({"sample", "--critic", "mllm", "--critic-endpoint", stub.endpoint(), "--out",
                           (dir / "t.jsonl").string()});
    CHECK(r.code == 0);
    const std::string trace = testing::read_file((dir / "t.jsonl").string());
    CHECK(trace.find("\"fallback\"") != std::string::npos);
    stub.stop();
  }

  TEST_CASE("remote denoiser failure flushes the partial trace") {
    StubOptions so;
    so.denoise = StubDenoise::kWrongShape;
    StubServer stub(so);
    stub.start();
    const fs::path dir = scratch("abort");
    const auto r = invoke({"sample", "--method", "vanilla", "--denoiser", "remote", "--denoiser-endpoint",
                           stub.endpoint(), "--out", (dir / "t.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("shape mismatch") != std::string::npos);
    const std::string trace = testing::read_file((dir / "t.jsonl").string());
    CHECK(nlohmann::json::parse(first_line(trace)).at("type") == "header");
    stub.stop();
  }
}
