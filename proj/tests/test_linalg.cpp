#include <cmath>

#include "doctest.h"
#include "hlx/linalg.hpp"
#include "hlx/rng.hpp"

using namespace hlx;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m.at(r, c) = rows[r][c];
  return m;
}

}  // namespace

TEST_CASE("solve diagonal system") {
  LinearSystem sys{from_rows({{2, 0}, {0, 4}}), {2, 8}};
  auto r = solve(sys);
  REQUIRE(r.has_value());
  CHECK(r->solution[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r->solution[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r->residual_inf == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("solve identity system returns rhs") {
  LinearSystem sys{Matrix::identity(4), {0.25, -3.5, 7.0, 0.125}};
  auto r = solve(sys);
  REQUIRE(r.has_value());
  for (int i = 0; i < 4; ++i) CHECK(r->solution[i] == sys.rhs[i]);
}

TEST_CASE("overdetermined system built from a known solution") {
  Rng rng(42);
  const Vec truth = {0.7, -1.3, 2.1};
  Matrix a(6, 3);
  for (double& v : a.data) v = rng.uniform(-1, 1);
  Vec b = matvec(a, truth);
  auto r = solve({a, b});
  REQUIRE(r.has_value());
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(r->solution[i] - truth[i]) < 1e-9);
}

TEST_CASE("rank-deficient system is reported") {
  // Second column is a multiple of the first.
  LinearSystem sys{from_rows({{1, 2}, {2, 4}, {3, 6}}), {1, 2, 3}};
  CHECK_FALSE(solve(sys).has_value());
}

TEST_CASE("square random systems recover the constructed solution") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 7);
    Matrix a(n, n);
    for (double& v : a.data) v = rng.uniform(-1, 1);
    for (int i = 0; i < n; ++i) a.at(i, i) += 3.0;  // keep it well conditioned
    Vec truth(n);
    for (double& v : truth) v = rng.uniform(-2, 2);
    auto r = solve({a, matvec(a, truth)});
    REQUIRE(r.has_value());
    for (int i = 0; i < n; ++i) CHECK(std::abs(r->solution[i] - truth[i]) < 1e-9);
  }
}

TEST_CASE("vectors_equal threshold rule") {
  CompareConfig tight{1e-8, 0};
  auto r = vectors_equal(Vec{1, 2}, Vec{1 + 1e-10, 2 - 1e-10}, tight);
  CHECK(r.equal);
  CHECK(r.mismatches == 0);

  CompareConfig one_off{1e-8, 1};
  r = vectors_equal(Vec{1, 2, 3}, Vec{1, 2, 9}, one_off);
  CHECK(r.equal);
  CHECK(r.mismatches == 1);

  CompareConfig half{0.5, 0};
  r = vectors_equal(Vec{1}, Vec{2}, half);
  CHECK_FALSE(r.equal);
}

TEST_CASE("vectors_equal is symmetric and reflexive") {
  Rng rng(13);
  CompareConfig cfg{1e-6, 2};
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 10);
    Vec a = rng.uniform_vec(d, -5, 5);
    Vec b = rng.uniform_vec(d, -5, 5);
    const auto ab = vectors_equal(a, b, cfg);
    const auto ba = vectors_equal(b, a, cfg);
    CHECK(ab.equal == ba.equal);
    CHECK(ab.mismatches == ba.mismatches);
    CHECK(vectors_equal(a, a, cfg).equal);
  }
}
