// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pingpong/denoiser.hpp"
#include "pingpong/errors.hpp"

using namespace pingpong;

using testing::mc_posterior_mean;
using testing::McEstimate;

TEST_SUITE("denoiser") {
  TEST_CASE("single Gaussian hand case") {
    auto s = std::make_shared<const NoiseSchedule>(testing::tiny_schedule());
    const AnalyticDenoiser den(testing::single_world(2.0, 0.0, 1.0), s);
    const LatentState x{Points(1, 2, std::vector<double>{1.16791, 0.0}), 2};
    const Condition c{{1.0}, {0.0}};
    const PosteriorTerms post = den.posterior(x, c);
    CHECK(post.posterior_mean.at(0, 0) == doctest::Approx(1.55102).epsilon(1e-4));
    CHECK(post.posterior_mean.at(0, 1) == 0.0);
    const Points eps = den.predict(x, c);
    CHECK(std::abs(eps.at(0, 0) + 0.28006) < 1e-4);
    CHECK(eps.at(0, 1) == 0.0);
    CHECK(analytic_eps(testing::single_world(2.0, 0.0, 1.0), c, x, *s) == eps);
  }

  TEST_CASE("analytic posterior matches a Monte Carlo oracle") {
    std::mt19937_64 gen(2024);
    const auto s = testing::default_schedule();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int cases = 0;
    while (cases < 20) {
      const int K = 1 + static_cast<int>(u(gen) * 4);
      GMMWorld w;
      w.means = Points(K, 2);
      for (double& v : w.means.flat()) v = 6.0 * u(gen) - 3.0;
      for (int k = 0; k < K; ++k) w.scales.push_back(0.3 + u(gen));
      Condition c{std::vector<double>(K), std::vector<double>(K, 0.0)};
      for (double& v : c.weights) v = 0.05 + u(gen);
      c.weights = normalize_weights(c.weights, "test");
      const int t = 5 + static_cast<int>(u(gen) * 20);
      const double ab = s->alpha_bar(t);
      // x_t from the marginal: x0 from the prior, then noised.
      std::discrete_distribution<int> pick(c.weights.begin(), c.weights.end());
      std::normal_distribution<double> n01;
      const int k = pick(gen);
      Points x(1, 2);
      for (int d = 0; d < 2; ++d) {
        const double x0 = w.means.at(k, d) + w.scales[k] * n01(gen);
        x.at(0, d) = std::sqrt(ab) * x0 + std::sqrt(1 - ab) * n01(gen);
      }
      const AnalyticDenoiser den(w, s);
      const LatentState state{x, t};
      const PosteriorTerms post = den.posterior(state, c);
      const McEstimate mc = mc_posterior_mean(w, c.weights, x.row(0), ab, 1000000, gen);
      for (int d = 0; d < 2; ++d) {
        INFO("case " << cases << " d=" << d << " analytic=" << post.posterior_mean.at(0, d) << " mc=" << mc.mean[d]
                     << " se=" << mc.se[d]);
        CHECK(std::abs(post.posterior_mean.at(0, d) - mc.mean[d]) <= 3.0 * mc.se[d]);
      }
      ++cases;
    }
  }

  TEST_CASE("responsibilities sum to one and suppression zeroes a component") {
    const auto s = testing::default_schedule();
    GMMWorld w;
    w.means = Points(3, 2, std::vector<double>{3, 0, -3, 0, 0, 3});
    w.scales = {0.5, 0.5, 0.5};
    const AnalyticDenoiser den(w, s, 1.0);
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n(0.0, 2.0);
    Points x(32, 2);
    for (double& v : x.flat()) v = n(gen);
    for (int t : {1, 2, 10, 30, 50}) {
      const Condition c{{0.5, 0.3, 0.2}, {0.0, 0.0, 0.0}};
      const PosteriorTerms p = den.posterior({x, t}, c);
      for (std::size_t i = 0; i < 32; ++i) {
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += p.responsibilities[i * 3 + k];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
      const Condition zeroed{{0.5, 0.3, 0.2}, {0.0, 0.0, 1.0}};
      const PosteriorTerms q = den.posterior({x, t}, zeroed);
      for (std::size_t i = 0; i < 32; ++i) CHECK(q.responsibilities[i * 3 + 2] == 0.0);
    }
    const Condition none{{0.5, 0.3, 0.2}, {1.0, 1.0, 1.0}};
    CHECK_THROWS_AS(den.predict({x, 10}, none), EmptySupportError);
    CHECK_THROWS_AS(den.predict({x, 0}, Condition{{0.5, 0.3, 0.2}, {0, 0, 0}}), StepError);
    CHECK_THROWS_AS(den.predict({x, 10}, Condition{{0.5, 0.5}, {0, 0}}), ShapeError);
  }

  TEST_CASE("far-away points do not underflow") {
    const auto s = testing::default_schedule();
    GMMWorld w;
    w.means = Points(2, 2, std::vector<double>{50, 0, -50, 0});
    w.scales = {0.1, 0.1};
    const AnalyticDenoiser den(w, s);
    const LatentState x{Points(1, 2, std::vector<double>{400.0, 400.0}), 1};
    CHECK(den.predict(x, Condition{{0.5, 0.5}, {0, 0}}).all_finite());
  }

  TEST_CASE("point-mass limit") {
    const auto s = testing::default_schedule();
    const LatentState x{Points(1, 2, std::vector<double>{0.3, -0.2}), 20};
    const Points eps = analytic_eps(testing::single_world(1.0, 2.0, 1e-9), Condition{{1.0}, {0.0}}, x, *s);
    const double ab = s->alpha_bar(20);
    CHECK(eps.at(0, 0) == doctest::Approx((0.3 - std::sqrt(ab) * 1.0) / std::sqrt(1 - ab)).epsilon(1e-12));
    CHECK(eps.at(0, 1) == doctest::Approx((-0.2 - std::sqrt(ab) * 2.0) / std::sqrt(1 - ab)).epsilon(1e-12));
  }

  TEST_CASE("single Gaussian slope by finite differences") {
    const auto s = testing::default_schedule();
    const double sc = 0.7;
    const AnalyticDenoiser den(testing::single_world(1.0, -1.0, sc), s);
    const Condition c{{1.0}, {0.0}};
    for (int t : {1, 5, 20, 45}) {
      const double ab = s->alpha_bar(t);
      const double slope = std::sqrt(1 - ab) / (ab * sc * sc + 1 - ab);
      const double h = 1e-4;
      const LatentState lo{Points(1, 2, std::vector<double>{0.5 - h, 0.2}), t};
      const LatentState hi{Points(1, 2, std::vector<double>{0.5 + h, 0.2}), t};
      const double fd = (den.predict(hi, c).at(0, 0) - den.predict(lo, c).at(0, 0)) / (2 * h);
      CHECK(std::abs(fd - slope) <= 1e-6);
      CHECK(std::abs(den.predict(hi, c).at(0, 1) - den.predict(lo, c).at(0, 1)) <= 1e-12);
    }
  }

  TEST_CASE("perturbation wrapper") {
    const auto s = testing::default_schedule();
    auto base = std::make_shared<const AnalyticDenoiser>(testing::single_world(1.0, 0.0, 0.5), s);
    const Condition c{{1.0}, {0.0}};
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n;
    Points x(16, 2);
    for (double& v : x.flat()) v = n(gen);
    const LatentState state{x, 12};
    const Points ref = base->predict(state, c);

    CHECK(perturbed_eps(base, 0.0, PerturbationMode::kRandomPerCall)->predict(state, c) == ref);
    CHECK(perturbed_eps(base, 0.0, PerturbationMode::kConstantDirection)->predict(state, c) == ref);
    for (auto mode : {PerturbationMode::kConstantDirection, PerturbationMode::kRandomPerCall}) {
      auto den = perturbed_eps(base, 0.1, mode, 3);
      const Points a = den->predict(state, c);
      const Points b = den->predict(state, c);
      for (std::size_t i = 0; i < 16; ++i) {
        const double d0 = a.at(i, 0) - ref.at(i, 0), d1 = a.at(i, 1) - ref.at(i, 1);
        CHECK(std::abs(std::hypot(d0, d1) - 0.1) <= 1e-12);
      }
      if (mode == PerturbationMode::kRandomPerCall) {
        CHECK(a != b);
      } else {
        CHECK(a == b);
      }
    }
    CHECK_THROWS_AS(perturbed_eps(base, -0.1, PerturbationMode::kConstantDirection), RangeError);
    CHECK(parse_perturbation_mode("constant") == PerturbationMode::kConstantDirection);
    CHECK(parse_perturbation_mode("random-per-call") == PerturbationMode::kRandomPerCall);
    CHECK_THROWS_AS(parse_perturbation_mode("gaussian"), RangeError);
  }

  TEST_CASE("world validation, json and nearest component") {
    GMMWorld w;
    w.means = Points(2, 2, std::vector<double>{1, 0, -1, 0});
    w.scales = {0.5, 0.5};
    CHECK_NOTHROW(w.validate());
    const double origin[] = {0.0, 0.0};
    CHECK(w.nearest_component(origin) == 0);
    const double right[] = {0.1, 5.0};
    CHECK(w.nearest_component(right) == 0);
    const double left[] = {-0.1, 5.0};
    CHECK(w.nearest_component(left) == 1);

    nlohmann::json j = w;
    CHECK(j.dump() == R"({"means":[[1.0,0.0],[-1.0,0.0]],"scales":[0.5,0.5]})");
    const GMMWorld back = j.get<GMMWorld>();
    CHECK(back.means == w.means);
    CHECK(back.scales == w.scales);

    GMMWorld bad = w;
    bad.scales[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), RangeError);
    bad.scales = {1.0};
    CHECK_THROWS_AS(bad.validate(), ShapeError);
  }

  TEST_CASE("denoise wire format") {
    const LatentState x{Points(2, 2, std::vector<double>{1.0, -0.5, 0.25, 2.0}), 7};
    const Condition c{{0.75, 0.25}, {0.0, 1.0}};
    CHECK(denoise_request_body(x, 0.5, c) ==
          R"({"t":7,"alpha_bar":0.5,"x":[[1.0,-0.5],[0.25,2.0]],"cond":{"weights":[0.75,0.25],"suppress":[0.0,1.0]}})");
    const Points eps = parse_denoise_response(R"({"eps":[[0.1,0.2],[0.3,0.4]]})", 2, 2);
    CHECK(eps.at(1, 0) == 0.3);
    CHECK_THROWS_AS(parse_denoise_response(R"({"eps":[[0.1,0.2]]})", 2, 2), ShapeError);
    CHECK_THROWS_AS(parse_denoise_response(R"({"eps":[[0.1],[0.3]]})", 2, 2), ShapeError);

    const Endpoint e = Endpoint::parse("http://127.0.0.1:8080/v1");
    CHECK(e.base == "http://127.0.0.1:8080");
    CHECK(e.prefix == "/v1");
    CHECK(Endpoint::parse("http://localhost:9").prefix == "");
  }
}
