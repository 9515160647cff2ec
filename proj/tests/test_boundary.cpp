#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hlx/boundary.hpp"
#include "hlx/oracle.hpp"

using namespace hlx;
using hlxtest::make_model;

TEST_CASE("find_boundary roots an affine function") {
  auto m = make_model({1, 1}, {{{1}}}, {{-5}});  // f(x) = x - 5
  HardLabelOracle oracle(m);
  SearchConfig cfg;
  cfg.epsilon = 1e-12;
  auto bp = find_boundary(oracle, Vec{0}, Vec{1}, cfg);
  REQUIRE(bp.has_value());
  CHECK(std::abs(bp->point[0] - 5.0) <= 1e-12);
  CHECK(std::abs(bp->s_slow - bp->s_fast) < 1e-12);
}

TEST_CASE("find_boundary bound on the query meter") {
  auto m = make_model({1, 1}, {{{1}}}, {{-5}});
  HardLabelOracle oracle(m);
  SearchConfig cfg;
  cfg.epsilon = 1e-12;
  const auto before = oracle.queries();
  auto bp = find_boundary(oracle, Vec{0}, Vec{1}, cfg);
  REQUIRE(bp.has_value());
  const auto used = oracle.queries() - before;
  // Bracket width when the flip shows up is at most twice the final stride.
  const double w0 = 2.0 * std::max({std::abs(bp->s_slow),
                                    std::abs(bp->s_fast),
                                    cfg.stride(cfg.domain_radius)});
  const double budget = 2.0 * (cfg.max_expansions + 1) +
                        std::ceil(std::log2(w0 / cfg.epsilon)) + 2;
  CHECK(used <= static_cast<std::uint64_t>(budget));
}

TEST_CASE("constant-label function has no boundary") {
  auto m = make_model({1, 1}, {{{0}}}, {{1}});
  HardLabelOracle oracle(m);
  SearchConfig cfg;
  CHECK_FALSE(find_boundary(oracle, Vec{0}, Vec{1}, cfg).has_value());
}

TEST_CASE("returned point is epsilon-close in function value") {
  auto victim = generate_model(Architecture{{4, 3, 1}}, 17);
  HardLabelOracle oracle(victim);
  SearchConfig cfg;
  cfg.epsilon = 1e-14;
  cfg.rng_seed = 5;
  auto points = collect_boundary_points(oracle, 20, cfg);
  REQUIRE(!points.empty());
  for (const auto& bp : points) {
    const auto r = forward(victim, bp.point);
    const auto t = affine_for_pattern(victim, r.pattern);
    const double slope = std::abs(dot(t.gamma, bp.direction));
    // Evaluation itself rounds at ~|terms| * 2^-52, which dominates once
    // slope * epsilon drops below it.
    double mag = std::abs(t.beta);
    for (std::size_t i = 0; i < t.gamma.size(); ++i)
      mag += std::abs(t.gamma[i] * bp.point[i]);
    const double noise = 16 * 0x1.0p-52 * mag;
    CHECK(std::abs(r.value) <= slope * cfg.epsilon * (1.0 + 1e-6) + noise);
  }
}

TEST_CASE("boundary point invariants re-checked through the oracle") {
  auto victim = generate_model(Architecture{{3, 2, 1}}, 23);
  HardLabelOracle oracle(victim);
  SearchConfig cfg;
  cfg.rng_seed = 9;
  auto points = collect_boundary_points(oracle, 8 * 4, cfg);
  REQUIRE(!points.empty());
  CHECK(points.size() <= 32);
  for (const auto& bp : points) {
    CHECK(std::abs(bp.s_slow - bp.s_fast) < cfg.epsilon);
    // 3 extra queries: start, slow side, fast side.
    const int z_start = oracle.query(bp.start);
    const int z_slow = oracle.query(bp.point);
    Vec fast = bp.start;
    for (std::size_t i = 0; i < fast.size(); ++i)
      fast[i] += bp.s_fast * bp.direction[i];
    const int z_fast = oracle.query(fast);
    CHECK(z_slow == z_start);
    CHECK(z_fast != z_slow);
    CHECK(bp.label_inside == z_slow);
  }
}

TEST_CASE("collection is deterministic in the seed") {
  auto victim = generate_model(Architecture{{3, 2, 1}}, 29);
  HardLabelOracle oracle(victim);
  SearchConfig cfg;
  cfg.rng_seed = 77;
  auto a = collect_boundary_points(oracle, 16, cfg);
  auto b = collect_boundary_points(oracle, 16, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].point == b[i].point);
    CHECK(a[i].s_slow == b[i].s_slow);
  }
}

TEST_CASE("out-of-reach decision boundary yields an empty collection") {
  auto m = make_model({2, 1}, {{{0.5, -0.25}}}, {{1e15}});
  HardLabelOracle oracle(m);
  SearchConfig cfg;
  cfg.rng_seed = 3;
  CollectStats stats;
  auto points = collect_boundary_points(oracle, 10, cfg, &stats);
  CHECK(points.empty());
  CHECK(stats.failures == 10);
}

TEST_CASE("shrinking epsilon tightens the achieved function value") {
  auto victim = generate_model(Architecture{{4, 2, 1}}, 31);
  HardLabelOracle oracle(victim);
  SearchConfig coarse, fine;
  coarse.epsilon = 1e-6;
  fine.epsilon = 1e-10;
  int compared = 0;
  for (std::uint64_t seed = 41; seed < 51; ++seed) {
    Rng rng(seed);
    const Vec start = rng.uniform_vec(4, -1, 1);
    const Vec dir = rng.sphere_direction(4);
    auto a = find_boundary(oracle, start, dir, coarse);
    auto b = find_boundary(oracle, start, dir, fine);
    if (!a || !b) continue;
    const double fa = std::abs(forward_value(victim, a->point));
    const double fb = std::abs(forward_value(victim, b->point));
    CHECK(fb <= fa + 1e-300);
    ++compared;
  }
  CHECK(compared > 0);
}
