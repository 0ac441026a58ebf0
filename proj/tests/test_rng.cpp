// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <string>
#include <cstring>

#include "pingpong/latent.hpp"
#include "pingpong/rng.hpp"

using namespace pingpong;

TEST_SUITE("rng") {
  TEST_CASE("philox4x32-10 known answers") {
    using B = Philox::Block;
    CHECK(Philox(0).block(0, 0) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox(~0ull).block(~0ull, ~0ull) == B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox(0x299f31d0a4093822ull).block(0x0370734413198a2eull, 0x85a308d3243f6a88ull) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("normals are addressable by block") {
    const Philox rng(42);
    std::vector<double> all(10), tail(4);
    CHECK(fill_normals(rng, 1, 0, all) == 5);
    CHECK(fill_normals(rng, 1, 3, tail) == 2);
    for (int i = 0; i < 4; ++i) CHECK(tail[i] == all[6 + i]);

    std::vector<double> other(10);
    fill_normals(rng, 2, 0, other);
    CHECK(other != all);
  }

  TEST_CASE("normal moments") {
    const Philox rng(7);
    std::vector<double> v(200000);
    fill_normals(rng, 7, 0, v);
    double m = 0, m2 = 0;
    for (double x : v) {
      CHECK(std::isfinite(x));
      m += x;
      m2 += x * x;
    }
    m /= v.size();
    m2 /= v.size();
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(m2 - 1.0) < 0.02);
  }

  TEST_CASE("uniforms lie in [0,1)") {
    const Philox rng(3);
    std::vector<double> u(10001);
    CHECK(fill_uniforms(rng, 7, 0, u) == 5001);
    for (double x : u) {
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }

  TEST_CASE("cursor advances and noise regenerates from its source") {
    const Philox rng(11);
    StreamCursor cur(rng, 1);
    NoiseDraw a = draw_noise(cur, 11, 3, 2);
    CHECK(cur.counter() == 3);
    NoiseDraw b = draw_noise(cur, 11, 5, 2);
    CHECK(b.source.counter == 3);
    CHECK(cur.counter() == 8);
    CHECK(regenerate_noise(a.source, 3, 2).eps == a.eps);
    CHECK(regenerate_noise(b.source, 5, 2).eps == b.eps);
    CHECK(injected_noise(Points(2, 2)).source.injected);
  }
}

TEST_SUITE("latent") {
  TEST_CASE("digest canonicalizes negative zero and depends on t") {
    LatentState a{Points(2, 2, std::vector<double>{0.0, 1.0, -2.0, 3.5}), 5};
    LatentState b = a;
    b.x.at(0, 0) = -0.0;
    CHECK(latent_digest(a) == latent_digest(b));
    b.t = 4;
    CHECK(latent_digest(a) != latent_digest(b));
    b = a;
    b.x.at(1, 1) = std::nextafter(3.5, 4.0);
    CHECK(latent_digest(a) != latent_digest(b));
  }

  TEST_CASE("digest byte layout") {
    // Independent reference: FNV-1a over the little-endian bytes written by hand.
    LatentState s{Points(1, 1, std::vector<double>{1.0}), 2};
    std::vector<unsigned char> bytes = {2, 0, 0, 0, 0, 0, 0, 0};
    const std::uint64_t one = 0x3FF0000000000000ull;
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(one >> (8 * i)));
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    CHECK(latent_digest(s) == h);
  }

  TEST_CASE("fnv1a reference vectors") {
    const std::string a = "a";
    CHECK(fnv1a({reinterpret_cast<const unsigned char*>(a.data()), a.size()}) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a({}) == 0xcbf29ce484222325ull);
  }

  TEST_CASE("points helpers") {
    Points p(2, 2, std::vector<double>{1, 2, 3, 4});
    CHECK(p.mean() == std::vector<double>{2, 3});
    Points q = axpby(2.0, p, -1.0, p);
    CHECK(q == p);
    CHECK(p.all_finite());
    p.at(0, 0) = NAN;
    CHECK_FALSE(p.all_finite());
  }
}
