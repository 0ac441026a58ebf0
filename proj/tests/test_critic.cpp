// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "pingpong/critic.hpp"
#include "pingpong/errors.hpp"

using namespace pingpong;

namespace {

GMMWorld line_world() {
  GMMWorld w;
  w.means = Points(3, 2, std::vector<double>{-4, 0, 0, 0, 4, 0});
  w.scales = {0.5, 0.5, 0.5};
  return w;
}

// counts[k] points placed exactly on mean k.
LatentState at_means(const GMMWorld& w, const std::vector<int>& counts) {
  std::size_t total = 0;
  for (int c : counts) total += static_cast<std::size_t>(c);
  LatentState s{Points(total, 2), 0};
  std::size_t i = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (int n = 0; n < counts[k]; ++n, ++i) {
      s.x.at(i, 0) = w.means.at(k, 0);
      s.x.at(i, 1) = w.means.at(k, 1);
    }
  }
  return s;
}

Prompt two_of_three() {
  Prompt p;
  p.required = {{0, 0.5}, {1, 0.5}};
  p.forbidden = {2};
  return p;
}

}  // namespace

TEST_SUITE("critic") {
  TEST_CASE("oracle check examples") {
    const GMMWorld w = line_world();
    const Prompt p = two_of_three();

    const Critique only_a = oracle_check(at_means(w, {20, 0, 0}), p, w);
    CHECK(only_a.score == 0.0);
    REQUIRE(only_a.feedback.size() == 2);
    CHECK(only_a.feedback[0] == FeedbackItem{1, FeedbackKind::kMissing, 0.0, 0.5});
    CHECK(only_a.feedback[1] == FeedbackItem{0, FeedbackKind::kExcess, 1.0, 0.5});
    CHECK(only_a.diagnosis ==
          "1. component 1 missing: observed 0.000, target 0.500\n"
          "2. component 0 excess: observed 1.000, target 0.500\n");

    const Critique both = oracle_check(at_means(w, {10, 10, 0}), p, w);
    CHECK(both.score == 1.0);
    CHECK(both.feedback.empty());
    CHECK(both.diagnosis == "CONSISTENT");

    const Critique forbidden = oracle_check(at_means(w, {7, 7, 6}), p, w);
    REQUIRE(forbidden.feedback.size() == 1);
    CHECK(forbidden.feedback[0].kind == FeedbackKind::kForbiddenPresent);
    CHECK(forbidden.feedback[0].observed == doctest::Approx(0.3));
  }

  TEST_CASE("tolerance band is closed") {
    const GMMWorld w = line_world();
    Prompt p;
    p.required = {{0, 0.5}, {1, 0.5}};
    // 0.35 and 0.65 sit exactly on the band edges.
    CHECK(oracle_check(at_means(w, {7, 13, 0}), p, w).score == 1.0);
    CHECK(oracle_check(at_means(w, {6, 14, 0}), p, w).score == 0.0);
    p.forbidden = {2};
    p.required = {{0, 0.85}};
    CHECK(oracle_check(at_means(w, {17, 0, 3}), p, w).score == 1.0);
    CHECK(oracle_check(at_means(w, {16, 0, 4}), p, w).score == 0.0);
  }

  TEST_CASE("synthesize examples") {
    const GMMWorld w = line_world();
    const Prompt p = two_of_three();
    const Condition base = encode(p, 3);

    const Critique missing = oracle_check(at_means(w, {10, 0, 10}), p, w);
    const Correction c = oracle_synthesize(missing, p, base, 1.0);
    // (0.5, 0.5 + 0.5, 0) renormalized.
    CHECK(c.refined.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(c.refined.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(c.refined.weights[2] == 0.0);
    CHECK(c.refined.suppress == std::vector<double>{0, 0, 1});
    CHECK(c.omissions.suppress[2] == doctest::Approx(0.5));
    CHECK(c.omissions.suppress[0] == 0.0);

    const Critique forb = oracle_check(at_means(w, {7, 7, 6}), p, w);
    const Correction f = oracle_synthesize(forb, p, base, 1.0);
    CHECK(f.omissions.suppress[2] == doctest::Approx(0.3));
    CHECK(f.refined.weights == base.weights);

    const Critique excess = oracle_check(at_means(w, {18, 2, 0}), p, w);
    const Correction e = oracle_synthesize(excess, p, base, 2.0);
    CHECK(e.omissions.suppress[0] == doctest::Approx(0.4));
    CHECK(e.refined.weights[1] == doctest::Approx((0.5 + 2.0 * 0.4) / 1.8));

    const Critique pass = oracle_check(at_means(w, {10, 10, 0}), p, w);
    CHECK_THROWS_AS(oracle_synthesize(pass, p, base, 1.0), ContractError);
    CHECK_THROWS_AS(oracle_synthesize(missing, p, base, -1.0), RangeError);
    CHECK_THROWS_AS(ConsistentCritic{}.synthesize(pass, p, base, 3), ContractError);
  }

  TEST_CASE("soundness and completeness on random previews") {
    const GMMWorld w = line_world();
    std::mt19937_64 gen(77);
    std::normal_distribution<double> n(0.0, 3.0);
    std::uniform_int_distribution<int> m(1, 40);
    int passes = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t M = static_cast<std::size_t>(m(gen));
      LatentState s{Points(M, 2), 0};
      for (double& v : s.x.flat()) v = n(gen);
      const Prompt p = two_of_three();
      // Independent nearest-mean count along the x axis.
      std::vector<int> count(3, 0);
      for (std::size_t i = 0; i < M; ++i) {
        const double x = s.x.at(i, 0);
        ++count[x < -2.0 ? 0 : (x <= 2.0 ? 1 : 2)];
      }
      std::vector<bool> bad(3, false);
      for (int k = 0; k < 2; ++k) bad[k] = std::abs(count[k] / double(M) - 0.5) > 0.15 + 1e-12;
      bad[2] = count[2] / double(M) > 0.15 + 1e-12;
      const Critique c = oracle_check(s, p, w);
      const bool all_ok = !bad[0] && !bad[1] && !bad[2];
      CHECK((c.score == 1.0) == all_ok);
      passes += all_ok;
      for (int k = 0; k < 3; ++k) {
        bool listed = false;
        for (const auto& f : c.feedback) listed |= f.component == k;
        CHECK(listed == bad[k]);
      }
      if (c.score < 1.0) {
        const Correction corr = oracle_synthesize(c, p, encode(p, 3), 1.0);
        CHECK_NOTHROW(corr.refined.validate());
        for (double u : corr.omissions.suppress) CHECK((u >= 0.0 && u <= 1.0));
      }
    }
    CHECK(passes > 0);
  }

  TEST_CASE("render preview") {
    const GMMWorld w = line_world();
    const std::string header = "P6\n128 128\n255\n";
    const std::string empty = render_preview(LatentState{Points(0, 2), 0}, w, 128);
    REQUIRE(empty.size() == header.size() + 128 * 128 * 3);
    CHECK(empty.substr(0, header.size()) == header);
    CHECK(empty.find_first_not_of(static_cast<char>(255), header.size()) == std::string::npos);

    const std::string dot = render_preview(LatentState{Points(1, 2), 0}, w, 128);
    const auto pixel = [&](int x, int y) {
      const std::size_t off = header.size() + (static_cast<std::size_t>(y) * 128 + x) * 3;
      return std::vector<unsigned char>{static_cast<unsigned char>(dot[off]), static_cast<unsigned char>(dot[off + 1]),
                                        static_cast<unsigned char>(dot[off + 2])};
    };
    CHECK(pixel(64, 64) == std::vector<unsigned char>{60, 180, 75});
    CHECK(pixel(63, 63) == std::vector<unsigned char>{60, 180, 75});
    CHECK(pixel(66, 64) == std::vector<unsigned char>{255, 255, 255});

    CHECK_THROWS_AS(render_preview(LatentState{Points(0, 2), 0}, w, 32), RangeError);

    LatentState spread{Points(5, 2, std::vector<double>{-4, 0, 0, 0, 4, 0, 1.5, -2.5, -3, 3}), 0};
    const std::string golden = testing::read_file(testing::fixture_path("preview_golden.ppm"));
    const bool same = render_preview(spread, w, 64) == golden;
    CHECK(same);
  }

  TEST_CASE("question templates are byte exact") {
    CHECK(Templates::analyze() ==
          "\n    Analyze the image and identify all mismatches with the original prompt.\n\n    Original prompt: "
          "\"{original_prompt}\"\n\n    Instructions:\n    1. List ALL elements from the prompt that are missing in the "
          "image.\n    2. List ALL elements from the prompt that appear incorrectly (wrong quantity, appearance, "
          "position, etc.).\n    3. Be precise and specific in your analysis.\n\n    Format your response as a "
          "numbered list of issues ONLY.\n    ");
    CHECK(Templates::refine() ==
          "\n    You are an expert prompt engineer for image generation models.\n\n    Original prompt: "
          "\"{original_prompt}\"\n\n    Issues with the current image:\n    {diagnosis}\n\n    Instructions:\n    1. "
          "Create an improved prompt that will help the image generation model better match the original "
          "intention.\n    2. Add specific details, emphasis, or clarifications to address the identified issues.\n "
          "   3. Maintain the core idea and style of the original prompt - do not add unrelated concepts.\n    4. The "
          "goal is to get an image closer to what was originally intended.\n    5. Use techniques like emphasis words, "
          "specific quantities, spatial relationships, or other details as needed.\n\n    Return only one "
          "well-structured, fluent sentence without any explanations.\n    ");
    CHECK(Templates::omission() ==
          "\n    Based on the original prompt and analysis of the current image, list elements that should be "
          "avoided.\n\n    Original prompt: \"{original_prompt}\"\n\n    Current image issues:\n    {diagnosis}\n\n "
          "   Instructions:\n    1. List quality issues to avoid\n    2. DO NOT include any objects from the "
          "prompt.\n\n    Return only comma-separated quality terms.\n    ");
    CHECK(Templates::judge().find("{original_prompt}") != std::string_view::npos);
    CHECK(Templates::judge().find("CONSISTENT") != std::string_view::npos);
  }

  TEST_CASE("render template") {
    CHECK(render_template("a {original_prompt} b {diagnosis} c {original_prompt}", "P", "D") == "a P b D c P");
    CHECK(render_template("{diagnosis", "P", "D") == "{diagnosis");
    CHECK(render_template("{original_prompt}", "{diagnosis}", "X") == "{diagnosis}");
    const std::string r = render_template(Templates::refine(), "two cats", "1. one cat missing");
    CHECK(r.find("Original prompt: \"two cats\"") != std::string::npos);
    CHECK(r.find("    1. one cat missing\n") != std::string::npos);
    CHECK(r.find('{') == std::string::npos);
  }

  TEST_CASE("round modes") {
    CHECK(parse_round_mode("1r") == RoundMode::k1r);
    CHECK(parse_round_mode("4r") == RoundMode::k4r);
    CHECK(round_count(RoundMode::k3r) == 3);
    CHECK(to_string(RoundMode::k2r) == "2r");
    CHECK_THROWS_AS(parse_round_mode("5r"), RangeError);
  }

  TEST_CASE("critic wire format") {
    CriticRequest req{RoundMode::k3r, 30, "Is component 2 present?", "UDYK", "1. component 2 is missing from the image."};
    CHECK(critic_request_body(req) == testing::read_file(testing::fixture_path("critic_request.json")));
    const CriticRequest back = parse_critic_request(critic_request_body(req));
    CHECK(back.round == req.round);
    CHECK(back.step == 30);
    CHECK(back.diagnosis == req.diagnosis);
    CHECK_THROWS_AS(parse_critic_request("{\"round\":\"2r\"}"), ParseError);

    const std::string bad = testing::read_file(testing::fixture_path("critic_response_inconsistent.json"));
    const CriticResponse r = parse_critic_response(bad);
    CHECK(r.score == 0.0);
    CHECK(r.avoid == "clutter, overlapping clusters");
    CHECK_FALSE(r.cond.has_value());
    CHECK(critic_response_body(r) == bad);

    CriticResponse with_cond = r;
    with_cond.cond = Condition{{0.5, 0.5}, {0.0, 1.0}};
    CHECK(parse_critic_response(critic_response_body(with_cond)).cond == with_cond.cond);

    try {
      parse_critic_response("not json");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.raw() == "not json");
    }
    CHECK_THROWS_AS(parse_critic_response(R"({"score":1.5,"diagnosis":""})"), ParseError);
  }
}
