#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "hlx/extraction.hpp"
#include "hlx/oracle.hpp"
#include "hlx/verify.hpp"

using namespace hlx;
using hlxtest::analytic_tuple;
using hlxtest::make_model;
using hlxtest::make_tuple;

namespace {

// Test oracle: the closed-form extracted weights of layer i (the induction
// result), evaluated directly on the victim parameters.
Matrix closed_form_weights(const ModelParameters& victim, int layer,
                           int anchor) {
  const auto c = cumulative_products(victim);
  const Matrix& w = victim.weights[layer - 1];
  Matrix out(w.rows, w.cols);
  for (std::size_t j = 0; j < w.rows; ++j)
    for (std::size_t v = 0; v < w.cols; ++v) {
      const double up =
          layer == 1 ? 1.0 : std::abs(c[layer - 2].at(v, anchor));
      out.at(j, v) = w.at(j, v) * up / std::abs(c[layer - 1].at(j, anchor));
    }
  return out;
}

Vec closed_form_biases(const ModelParameters& victim, int layer, int anchor) {
  const auto c = cumulative_products(victim);
  Vec out(victim.biases[layer - 1].size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = victim.biases[layer - 1][j] / std::abs(c[layer - 1].at(j, anchor));
  return out;
}

// True signs of the suffix factors G_j^{(i)} under the default plan. On
// victims whose plan patterns admit boundary points these are all equal;
// random victims need the per-neuron value.
std::vector<int> suffix_signs(const ModelParameters& victim, int layer) {
  const int k = victim.arch.hidden_layers();
  Vec r(victim.weights[k].row(0).begin(), victim.weights[k].row(0).end());
  for (int q = k; q >= layer + 1; --q) r = vecmat(r, victim.weights[q - 1]);
  std::vector<int> s(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) s[j] = r[j] > 0 ? 1 : -1;
  return s;
}

int true_suffix_sign(const ModelParameters& victim, int layer) {
  return suffix_signs(victim, layer)[0];
}

// Removes sign(G_j) from an analytic tuple, which is what the layer-wide
// sign guess accomplishes when the signs agree. The zero set of
// (gamma, beta) is sign-invariant, so the attached point stays valid.
RecoveredTuple strip_sign(RecoveredTuple t, int sign) {
  if (sign < 0) {
    for (double& g : t.gamma) g = -g;
    t.beta = -t.beta;
  }
  return t;
}

// Victims whose single-active plans all admit boundary points: one shared
// output-weight sign opposing the output bias.
ModelParameters extractable_1deep(int d0, int d1, std::uint64_t seed) {
  Rng rng(seed);
  ModelParameters m;
  m.arch.dims = {d0, d1, 1};
  Matrix w1(d1, d0);
  for (double& v : w1.data) v = rng.uniform(-1, 1);
  m.weights.push_back(std::move(w1));
  m.biases.push_back(rng.uniform_vec(d1, -0.3, 0.3));
  Matrix w2(1, d1);
  for (double& v : w2.data) v = rng.uniform(0.4, 1.0);
  m.weights.push_back(std::move(w2));
  m.biases.push_back({-rng.uniform(0.2, 0.6)});
  return m;
}

}  // namespace

TEST_CASE("layer-1 recovery applies the guessed sign") {
  auto t = make_tuple({1.0, -2.0}, 0.0);
  auto w = recover_layer1({&t}, 1, 0);
  CHECK(w.at(0, 0) == doctest::Approx(1.0));
  CHECK(w.at(0, 1) == doctest::Approx(-2.0));
  w = recover_layer1({&t}, -1, 0);
  CHECK(w.at(0, 0) == doctest::Approx(-1.0));
  CHECK(w.at(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("layer-1 rows on a 2-2-1 victim") {
  auto victim = make_model({2, 2, 1}, {{{1, 2}, {3, -1}}, {{2, 1}}},
                           {{0.1, 0.2}, {-0.5}});
  const int g1 = true_suffix_sign(victim, 1);
  auto t1 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 0, false));
  auto t2 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 1, false));
  auto w = recover_layer1({&t1, &t2}, g1, 0);
  CHECK(w.at(0, 0) == doctest::Approx(1.0));
  CHECK(w.at(0, 1) == doctest::Approx(2.0));
  CHECK(w.at(1, 0) == doctest::Approx(1.0));
  CHECK(w.at(1, 1) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("output-layer recovery solves to the closed form on 2-2-1") {
  auto victim = make_model({2, 2, 1}, {{{1, 2}, {3, -1}}, {{2, 1}}},
                           {{0.0, 0.0}, {0.0}});
  // Exact layer-1 weights anchored at coordinate 1.
  auto a1 = closed_form_weights(victim, 1, 0);
  auto t_out = analytic_tuple(victim, full_pattern(victim.arch));
  auto w = recover_layer_weights({&t_out}, a1, 1, 0);
  REQUIRE(w.has_value());
  CHECK(w->at(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(w->at(0, 1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("identity-like chain recovers a scaled identity") {
  auto victim = make_model({2, 2, 1}, {{{1, 0}, {1, 1}}, {{1, 1}}},
                           {{0.05, -0.05}, {-0.2}});
  auto a1 = closed_form_weights(victim, 1, 0);
  auto t_out = analytic_tuple(victim, full_pattern(victim.arch));
  auto w = recover_layer_weights({&t_out}, a1, 1, 0);
  REQUIRE(w.has_value());
  const auto expect = closed_form_weights(victim, 2, 0);
  CHECK(w->at(0, 0) == doctest::Approx(expect.at(0, 0)).epsilon(1e-12));
  CHECK(w->at(0, 1) == doctest::Approx(expect.at(0, 1)).epsilon(1e-12));
}

TEST_CASE("noise-free recovery equals the closed form on random deep victims") {
  Rng rng(101);
  int done = 0;
  while (done < 10) {
    const int d0 = 3 + static_cast<int>(rng.next_u64() % 4);
    auto victim = generate_model(Architecture{{d0, 2, 2, 1}}, rng.next_u64());
    const int k = 2, anchor = 0;
    try {
      std::vector<Matrix> weights(k + 1);
      Matrix c_prev = Matrix::identity(d0);
      bool ok = true;
      for (int i = 1; i <= k + 1 && ok; ++i) {
        const int di = victim.arch.dims[i];
        const auto signs =
            i <= k ? suffix_signs(victim, i) : std::vector<int>{1};
        std::vector<RecoveredTuple> tuples;
        std::vector<const RecoveredTuple*> ptrs;
        for (int j = 0; j < di; ++j)
          tuples.push_back(strip_sign(
              analytic_tuple(victim, plan_pattern(victim.arch, i, j, false)),
              signs[j]));
        for (auto& t : tuples) ptrs.push_back(&t);
        std::optional<Matrix> w;
        if (i == 1)
          w = recover_layer1(ptrs, 1, anchor);
        else
          w = recover_layer_weights(ptrs, c_prev, 1, anchor);
        if (!w) {
          ok = false;
          break;
        }
        c_prev = i == 1 ? *w : matmul(*w, c_prev);
        weights[i - 1] = std::move(*w);
      }
      if (!ok) continue;
      for (int i = 1; i <= k + 1; ++i) {
        const auto expect = closed_form_weights(victim, i, anchor);
        for (std::size_t t = 0; t < expect.data.size(); ++t)
          CHECK(std::abs(weights[i - 1].data[t] - expect.data[t]) < 1e-9);
      }
      ++done;
    } catch (const std::exception&) {
      continue;  // degenerate anchor draw, try another victim
    }
  }
}

TEST_CASE("bias recovery") {
  SUBCASE("0-deep case collapses to -A.x") {
    auto victim = make_model({2, 1}, {{{2, -4}}}, {{6}});
    auto t = analytic_tuple(victim, ActivationPattern{});
    Matrix w(1, 2);
    w.at(0, 0) = t.gamma[0];
    w.at(0, 1) = t.gamma[1];
    auto b = recover_biases(victim.arch, {w}, {&t}, {ActivationPattern{}});
    REQUIRE(b.has_value());
    CHECK((*b)[0][0] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("1-deep closed form") {
    auto victim = make_model({2, 2, 1}, {{{1.0, 0.6}, {-0.5, 1.1}}, {{0.9, 0.8}}},
                             {{0.15, -0.1}, {-0.25}});
    const int anchor = 0;
    const int g1 = true_suffix_sign(victim, 1);
    auto t1 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 0, false));
    auto t2 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 1, false));
    auto t3 = analytic_tuple(victim, full_pattern(victim.arch));
    auto w1 = recover_layer1({&t1, &t2}, g1, anchor);
    auto w2 = recover_layer_weights({&t3}, w1, 1, anchor);
    REQUIRE(w2.has_value());
    auto b = recover_biases(
        victim.arch, {w1, *w2}, {&t1, &t2, &t3},
        {plan_pattern(victim.arch, 1, 0, false),
         plan_pattern(victim.arch, 1, 1, false), full_pattern(victim.arch)});
    REQUIRE(b.has_value());
    const auto eb1 = closed_form_biases(victim, 1, anchor);
    const auto eb2 = closed_form_biases(victim, 2, anchor);
    CHECK((*b)[0][0] == doctest::Approx(eb1[0]).epsilon(1e-10));
    CHECK((*b)[0][1] == doctest::Approx(eb1[1]).epsilon(1e-10));
    CHECK((*b)[1][0] == doctest::Approx(eb2[0]).epsilon(1e-10));
  }
  SUBCASE("all-zero victim biases recover as zero") {
    auto victim = make_model({2, 2, 1}, {{{1.0, 0.6}, {-0.5, 1.1}}, {{0.9, 0.8}}},
                             {{0.0, 0.0}, {0.0}});
    // Boundary points for a homogeneous victim pass through scaled inputs;
    // use the analytic plan tuples directly.
    auto t1 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 0, false));
    auto t2 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 1, false));
    auto t3 = analytic_tuple(victim, full_pattern(victim.arch));
    const int g1 = true_suffix_sign(victim, 1);
    auto w1 = recover_layer1({&t1, &t2}, g1, 0);
    auto w2 = recover_layer_weights({&t3}, w1, 1, 0);
    REQUIRE(w2.has_value());
    auto b = recover_biases(
        victim.arch, {w1, *w2}, {&t1, &t2, &t3},
        {plan_pattern(victim.arch, 1, 0, false),
         plan_pattern(victim.arch, 1, 1, false), full_pattern(victim.arch)});
    REQUIRE(b.has_value());
    CHECK(std::abs((*b)[0][0]) < 1e-11);
    CHECK(std::abs((*b)[0][1]) < 1e-11);
    CHECK(std::abs((*b)[1][0]) < 1e-11);
  }
}

TEST_CASE("pattern count bound") {
  CHECK(count_max_patterns(Architecture{{4, 2, 1}}) == 3);
  CHECK(count_max_patterns(Architecture{{4, 2, 2, 1}}) == 12);
  CHECK(count_max_patterns(Architecture{{4, 2, 2, 2, 1}}) == 39);
  bool sat = false;
  count_max_patterns(Architecture{{4, 64, 64, 1}}, &sat);
  CHECK(sat);
}

TEST_CASE("plan patterns") {
  Architecture arch{{4, 2, 3, 1}};
  auto p = plan_pattern(arch, 2, 1, false);
  CHECK(p.layers[0] == std::vector<std::uint8_t>{1, 1});
  CHECK(p.layers[1] == std::vector<std::uint8_t>{0, 1, 0});
  auto r = plan_pattern(arch, 1, 0, true);
  CHECK(r.layers[0] == std::vector<std::uint8_t>{1, 0});
  CHECK(r.layers[1] == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("pattern enumeration stays within the bound and covers forwards") {
  auto victim = generate_model(Architecture{{3, 2, 2, 1}}, 303);
  const auto pats = enumerate_patterns(victim, 1u << 16);
  CHECK(pats.size() <= count_max_patterns(victim.arch) + 1);
  // Every pattern reachable by random probing must be enumerated.
  std::set<std::string> keys;
  for (const auto& p : pats) keys.insert(p.key());
  Rng rng(17);
  for (int i = 0; i < 20000; ++i) {
    const Vec x = rng.uniform_vec(3, -1, 1);
    CHECK(keys.count(forward(victim, x).pattern.key()) == 1);
  }
}

TEST_CASE("signature filter") {
  auto victim = extractable_1deep(3, 2, 404);
  const int anchor = 0;
  auto exact = theoretical_extraction(victim, anchor);

  std::vector<RecoveredTuple> recovered;
  for (int j = 0; j < 2; ++j)
    recovered.push_back(
        analytic_tuple(victim, plan_pattern(victim.arch, 1, j, false)));
  recovered.push_back(analytic_tuple(victim, full_pattern(victim.arch)));

  FilterConfig cfg;
  SUBCASE("functionally equivalent candidate passes") {
    CHECK(signature_filter(exact, recovered, cfg) == Verdict::Pass);
  }
  SUBCASE("negated layer-1 row fails") {
    auto bad = exact;
    for (std::size_t u = 0; u < bad.weights[0].cols; ++u)
      bad.weights[0].at(0, u) = -bad.weights[0].at(0, u);
    CHECK(signature_filter(bad, recovered, cfg) == Verdict::Fail);
  }
  SUBCASE("threshold is exactly 0.95 of N_valid") {
    // 20 valid tuples, 19 matching: passes at the threshold; 18 fails.
    std::vector<RecoveredTuple> many;
    for (int i = 0; i < 19; ++i) {
      auto t = analytic_tuple(victim, full_pattern(victim.arch));
      many.push_back(t);
    }
    auto off = analytic_tuple(victim, full_pattern(victim.arch));
    for (double& g : off.gamma) g += 10.0;  // matches nothing
    many.push_back(off);
    CHECK(signature_filter(exact, many, cfg) == Verdict::Pass);
    auto off2 = off;
    off2.beta += 5.0;
    many[0] = off2;
    CHECK(signature_filter(exact, many, cfg) == Verdict::Fail);
  }
  SUBCASE("budget overflow never rejects") {
    FilterConfig small = cfg;
    small.pattern_budget = 1;
    CHECK(signature_filter(exact, recovered, small) == Verdict::Unfiltered);
  }
}

TEST_CASE("sign filter") {
  auto victim = extractable_1deep(3, 2, 505);
  auto exact = theoretical_extraction(victim, 0);
  const int g1 = true_suffix_sign(victim, 1);
  CHECK(sign_filter(exact, {g1}, false));
  SUBCASE("flipped guess fails on a victim with known suffix sign") {
    // Rebuild the candidate as the attack would under the wrong guess.
    auto t1 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 0, false));
    auto t2 = analytic_tuple(victim, plan_pattern(victim.arch, 1, 1, false));
    auto t3 = analytic_tuple(victim, full_pattern(victim.arch));
    auto w1 = recover_layer1({&t1, &t2}, -g1, 0);
    auto w2 = recover_layer_weights({&t3}, w1, 1, 0);
    REQUIRE(w2.has_value());
    auto b = recover_biases(
        victim.arch, {w1, *w2}, {&t1, &t2, &t3},
        {plan_pattern(victim.arch, 1, 0, false),
         plan_pattern(victim.arch, 1, 1, false), full_pattern(victim.arch)});
    REQUIRE(b.has_value());
    ModelParameters wrong;
    wrong.arch = victim.arch;
    wrong.weights = {w1, *w2};
    wrong.biases = *b;
    CHECK_FALSE(sign_filter(wrong, {-g1}, false));
  }
}

TEST_CASE("prediction matching ratio") {
  auto m = generate_model(Architecture{{3, 2, 1}}, 606);
  CHECK(pmr(m, m, 5000, 9, 1.0) == doctest::Approx(1.0));
  auto neg = m;
  for (double& v : neg.weights[1].data) v = -v;
  neg.biases[1][0] = -neg.biases[1][0];
  CHECK(pmr(m, neg, 5000, 9, 1.0) == doctest::Approx(0.0));
  CHECK(pmr(m, neg, 5000, 9, 1.0) == pmr(m, neg, 5000, 9, 1.0));
}

TEST_CASE("attack on a 0-deep victim degenerates to one exact candidate") {
  auto victim = make_model({3, 1}, {{{0.7, -0.4, 0.2}}}, {{0.3}});
  HardLabelOracle oracle(victim);
  AttackConfig cfg;
  cfg.seed = 11;
  cfg.pmr_samples = 512;
  auto res = run_attack(oracle, victim.arch, cfg);
  REQUIRE(res.status == AttackStatus::Success);
  CHECK(res.report.candidates_enumerated == 1);
  CHECK(res.report.best_pmr == doctest::Approx(1.0));
  REQUIRE(res.model.has_value());
  const double c = closed_form_scale(victim, res.report.anchor);
  auto scale = estimate_scale(victim, *res.model, 2000, 21, 1.0);
  REQUIRE(scale.has_value());
  CHECK(scale->c == doctest::Approx(c).epsilon(1e-6));
}

TEST_CASE("end-to-end attack on a small 1-deep victim") {
  auto victim = extractable_1deep(8, 2, 707);
  HardLabelOracle oracle(victim);
  AttackConfig cfg;
  cfg.seed = 5;
  cfg.epsilon = 1e-13;
  cfg.pmr_samples = 1024;
  auto res = run_attack(oracle, victim.arch, cfg);
  REQUIRE(res.status == AttackStatus::Success);
  REQUIRE(res.model.has_value());
  CHECK(res.report.best_pmr >= 0.999);

  // Held-out agreement.
  CHECK(pmr(victim, *res.model, 100000, 99, 1.0) >= 0.9999);

  // Pattern agreement after alignment, and scale constancy.
  const auto alignment = align(victim, *res.model, res.report.anchor);
  Rng rng(23);
  int agree = 0;
  for (int i = 0; i < 300; ++i) {
    const Vec x = rng.uniform_vec(8, -1, 1);
    agree += forward(alignment.permuted_victim, x).pattern ==
             forward(*res.model, x).pattern;
  }
  CHECK(agree == 300);

  auto scale = estimate_scale(victim, *res.model, 10000, 29, 1.0);
  REQUIRE(scale.has_value());
  const double c_expected =
      closed_form_scale(alignment.permuted_victim, res.report.anchor);
  CHECK(std::abs(scale->c - c_expected) <= 1e-6 * std::abs(c_expected));
  CHECK(scale->spread_iqr < 1e-6);
}

TEST_CASE("insufficient data is reported with the shortfall") {
  auto m = make_model({2, 1}, {{{0.5, -0.25}}}, {{1e15}});  // no boundary
  HardLabelOracle oracle(m);
  AttackConfig cfg;
  cfg.seed = 2;
  auto res = run_attack(oracle, m.arch, cfg);
  CHECK(res.status == AttackStatus::InsufficientData);
  CHECK(res.report.message.find("need 1") != std::string::npos);
}

TEST_CASE("max-candidates 0 exits with no survivor") {
  auto victim = make_model({3, 1}, {{{0.7, -0.4, 0.2}}}, {{0.3}});
  HardLabelOracle oracle(victim);
  AttackConfig cfg;
  cfg.seed = 11;
  cfg.max_candidates = 0;
  auto res = run_attack(oracle, victim.arch, cfg);
  CHECK(res.status == AttackStatus::NoSurvivor);
  CHECK(res.report.candidates_enumerated == 0);
  CHECK(res.report.survivors == 0);
}

TEST_CASE("enumeration soundness on noise-free tuples") {
  auto victim = extractable_1deep(4, 2, 808);
  HardLabelOracle oracle(victim);
  std::vector<RecoveredTuple> tuples;
  tuples.push_back(
      analytic_tuple(victim, plan_pattern(victim.arch, 1, 0, false), 3));
  tuples.push_back(
      analytic_tuple(victim, plan_pattern(victim.arch, 1, 1, false), 2));
  tuples.push_back(analytic_tuple(victim, full_pattern(victim.arch), 4));
  AttackConfig cfg;
  cfg.seed = 3;
  cfg.pmr_samples = 512;
  auto res = run_attack(oracle, victim.arch, cfg, tuples);
  REQUIRE(res.status == AttackStatus::Success);
  CHECK(res.report.best_pmr == doctest::Approx(1.0));
  REQUIRE(res.model.has_value());
  const auto alignment = align(victim, *res.model, res.report.anchor);
  CHECK(max_param_error(alignment.theoretical, *res.model) < 1e-9);
}

TEST_CASE("deterministic result independent of worker count") {
  auto victim = extractable_1deep(6, 2, 909);
  HardLabelOracle o1(victim), o2(victim);
  AttackConfig cfg;
  cfg.seed = 13;
  cfg.epsilon = 1e-12;
  cfg.pmr_samples = 256;
  auto r1 = run_attack(o1, victim.arch, cfg);
  cfg.threads = 4;
  auto r2 = run_attack(o2, victim.arch, cfg);
  REQUIRE(r1.status == AttackStatus::Success);
  REQUIRE(r2.status == AttackStatus::Success);
  CHECK(r1.report.best_candidate_index == r2.report.best_candidate_index);
  for (std::size_t i = 0; i < r1.model->weights.size(); ++i)
    CHECK(r1.model->weights[i].data == r2.model->weights[i].data);
}
