#include "hlx/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hlx {

// ---------------------------------------------------------------------------
// Plans and pattern enumeration
// ---------------------------------------------------------------------------

ActivationPattern full_pattern(const Architecture& arch) {
  ActivationPattern p;
  const int k = arch.hidden_layers();
  p.layers.resize(k);
  for (int i = 0; i < k; ++i)
    p.layers[i].assign(arch.dims[i + 1], 1);
  return p;
}

ActivationPattern plan_pattern(const Architecture& arch, int layer, int neuron,
                               bool relaxed) {
  const int k = arch.hidden_layers();
  if (layer < 1 || layer > k + 1)
    throw std::invalid_argument("plan_pattern: bad layer");
  ActivationPattern p = full_pattern(arch);
  if (layer <= k) {
    p.layers[layer - 1].assign(arch.dims[layer], 0);
    p.layers[layer - 1][neuron] = 1;
  }
  if (relaxed) {
    for (int q = layer + 1; q <= k; ++q) {
      p.layers[q - 1].assign(arch.dims[q], 0);
      p.layers[q - 1][0] = 1;
    }
  }
  return p;
}

namespace {

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b, bool* sat) {
  if (a != 0 && b > UINT64_MAX / a) {
    if (sat) *sat = true;
    return UINT64_MAX;
  }
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b, bool* sat) {
  if (b > UINT64_MAX - a) {
    if (sat) *sat = true;
    return UINT64_MAX;
  }
  return a + b;
}

std::uint64_t nonzero_patterns(int width, bool* sat) {
  if (width >= 64) {
    if (sat) *sat = true;
    return UINT64_MAX;
  }
  return (1ull << width) - 1;
}

}  // namespace

std::uint64_t count_max_patterns(const Architecture& arch, bool* saturated) {
  if (saturated) *saturated = false;
  const int k = arch.hidden_layers();
  std::uint64_t prod = 1;
  for (int i = 1; i <= k; ++i)
    prod = sat_mul(prod, nonzero_patterns(arch.dims[i], saturated), saturated);
  std::uint64_t h = prod;
  for (int i = 2; i <= k; ++i) {
    std::uint64_t prefix = 1;
    for (int j = 1; j < i; ++j)
      prefix =
          sat_mul(prefix, nonzero_patterns(arch.dims[j], saturated), saturated);
    h = sat_add(h, prefix, saturated);
  }
  return h;
}

std::vector<ActivationPattern> enumerate_patterns(const ModelParameters& m,
                                                  std::size_t budget) {
  const Architecture& arch = m.arch;
  const int k = arch.hidden_layers();
  std::vector<ActivationPattern> out;

  // Every combination with at least one active neuron per layer. A 0-deep
  // model has exactly one (empty) pattern.
  ActivationPattern p = full_pattern(arch);
  std::function<void(int)> rec = [&](int layer) {
    if (out.size() >= budget) return;
    if (layer == k) {
      out.push_back(p);
      return;
    }
    const int d = arch.dims[layer + 1];
    for (std::uint64_t mask = 1; mask < (1ull << d); ++mask) {
      for (int j = 0; j < d; ++j)
        p.layers[layer][j] = (mask >> j) & 1 ? 1 : 0;
      rec(layer + 1);
      if (out.size() >= budget) return;
    }
  };
  rec(0);

  // Chains with one fully inactive layer; downstream states are forced by
  // the biases once a layer emits all zeros.
  for (int dead = 1; dead <= k && out.size() < budget; ++dead) {
    ActivationPattern chain = full_pattern(arch);
    chain.layers[dead - 1].assign(arch.dims[dead], 0);
    Vec h(arch.dims[dead], 0.0);
    for (int q = dead + 1; q <= k; ++q) {
      Vec pre = matvec(m.weights[q - 1], h);
      for (std::size_t j = 0; j < pre.size(); ++j) {
        pre[j] += m.biases[q - 1][j];
        chain.layers[q - 1][j] = pre[j] > 0.0 ? 1 : 0;
        if (pre[j] < 0.0) pre[j] = 0.0;
      }
      h = std::move(pre);
    }
    // Free prefix layers (each with at least one active neuron).
    std::function<void(int)> prefix = [&](int layer) {
      if (out.size() >= budget) return;
      if (layer == dead - 1) {
        out.push_back(chain);
        return;
      }
      const int d = arch.dims[layer + 1];
      for (std::uint64_t mask = 1; mask < (1ull << d); ++mask) {
        for (int j = 0; j < d; ++j)
          chain.layers[layer][j] = (mask >> j) & 1 ? 1 : 0;
        prefix(layer + 1);
        if (out.size() >= budget) return;
      }
    };
    prefix(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Layer recovery
// ---------------------------------------------------------------------------

std::optional<Vec> reanchor(const Vec& gamma, int anchor) {
  const double g = std::abs(gamma[anchor]);
  if (g <= kZeroThreshold) return std::nullopt;
  Vec out = gamma;
  for (double& v : out) v /= g;
  return out;
}

Matrix recover_layer1(const std::vector<const RecoveredTuple*>& tuples,
                      int sign_guess, int anchor) {
  const std::size_t d0 = tuples.front()->gamma.size();
  Matrix w(tuples.size(), d0);
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    auto g = reanchor(tuples[j]->gamma, anchor);
    if (!g) throw std::invalid_argument("recover_layer1: anchor not usable");
    for (std::size_t u = 0; u < d0; ++u) w.at(j, u) = sign_guess * (*g)[u];
  }
  return w;
}

std::optional<Matrix> recover_layer_weights(
    const std::vector<const RecoveredTuple*>& tuples, const Matrix& c_prev,
    int sign_guess, int anchor) {
  const std::size_t d0 = c_prev.cols;
  const std::size_t dprev = c_prev.rows;
  if (d0 < dprev) return std::nullopt;

  LinearSystem sys;
  sys.coefficients = Matrix(d0, dprev);
  for (std::size_t u = 0; u < d0; ++u)
    for (std::size_t v = 0; v < dprev; ++v)
      sys.coefficients.at(u, v) = c_prev.at(v, u);

  Matrix w(tuples.size(), dprev);
  for (std::size_t j = 0; j < tuples.size(); ++j) {
    auto g = reanchor(tuples[j]->gamma, anchor);
    if (!g) return std::nullopt;
    sys.rhs.assign(g->begin(), g->end());
    for (double& r : sys.rhs) r *= sign_guess;
    auto sol = solve(sys);
    if (!sol) return std::nullopt;
    for (std::size_t v = 0; v < dprev; ++v) w.at(j, v) = sol->solution[v];
  }
  return w;
}

namespace {

// Decomposes f(x) = gamma x + sum_i g[i] . b^{(i)} + b^{(k+1)} under a fixed
// pattern, with only the weights known.
struct AffineRows {
  Vec gamma;
  std::vector<Vec> g;  // per hidden layer
};

AffineRows bias_rows(const std::vector<Matrix>& weights,
                     const ActivationPattern& pattern) {
  const int k = static_cast<int>(weights.size()) - 1;
  AffineRows rows;
  rows.g.resize(k);
  Vec r(weights[k].row(0).begin(), weights[k].row(0).end());
  for (int q = k; q >= 1; --q) {
    for (std::size_t j = 0; j < r.size(); ++j)
      if (!pattern.layers[q - 1][j]) r[j] = 0.0;
    rows.g[q - 1] = r;
    r = vecmat(r, weights[q - 1]);
  }
  rows.gamma = std::move(r);
  return rows;
}

}  // namespace

std::optional<std::vector<Vec>> recover_biases(
    const Architecture& arch, const std::vector<Matrix>& weights,
    const std::vector<const RecoveredTuple*>& points,
    const std::vector<ActivationPattern>& plans) {
  const int k = arch.hidden_layers();
  const int unknowns = arch.neuron_count() + 1;
  if (static_cast<int>(points.size()) != unknowns || plans.size() != points.size())
    throw std::invalid_argument("recover_biases: need n+1 points with plans");

  LinearSystem sys;
  sys.coefficients = Matrix(unknowns, unknowns);
  sys.rhs.assign(unknowns, 0.0);
  for (int t = 0; t < unknowns; ++t) {
    AffineRows rows = bias_rows(weights, plans[t]);
    int col = 0;
    for (int i = 0; i < k; ++i)
      for (double v : rows.g[i]) sys.coefficients.at(t, col++) = v;
    sys.coefficients.at(t, col) = 1.0;
    sys.rhs[t] = -dot(rows.gamma, points[t]->point);
  }
  auto sol = solve(sys);
  if (!sol) return std::nullopt;

  std::vector<Vec> biases(k + 1);
  int col = 0;
  for (int i = 0; i < k; ++i) {
    biases[i].assign(arch.dims[i + 1], 0.0);
    for (int j = 0; j < arch.dims[i + 1]; ++j)
      biases[i][j] = sol->solution[col++];
  }
  biases[k] = {sol->solution[col]};
  return biases;
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

Verdict signature_filter(const ModelParameters& extracted,
                         const std::vector<RecoveredTuple>& recovered,
                         const FilterConfig& cfg) {
  bool saturated = false;
  const std::uint64_t h = count_max_patterns(extracted.arch, &saturated);
  if (saturated || h + 1 > cfg.pattern_budget) return Verdict::Unfiltered;

  const auto patterns = enumerate_patterns(extracted, cfg.pattern_budget);
  const auto sig = model_signature(extracted, patterns);

  std::vector<RecoveredTuple> sig_tuples(sig.size());
  for (std::size_t s = 0; s < sig.size(); ++s) {
    sig_tuples[s].gamma = sig[s].gamma;
    sig_tuples[s].beta = sig[s].beta;
    sig_tuples[s].valid.assign(sig[s].gamma.size(), 1);
  }

  int n_valid = 0, matched = 0;
  for (const auto& r : recovered) {
    if (r.occurrence <= 1) continue;
    ++n_valid;
    for (const auto& s : sig_tuples) {
      if (tuples_equal(r, s, cfg.cmp).equal) {
        ++matched;
        break;
      }
    }
  }
  if (n_valid == 0) return Verdict::Pass;
  return matched + 1e-9 >= cfg.adaptive_fraction * n_valid ? Verdict::Pass
                                                           : Verdict::Fail;
}

bool sign_filter(const ModelParameters& extracted,
                 const std::vector<int>& sign_guesses, bool relaxed,
                 double z) {
  const Architecture& arch = extracted.arch;
  const int k = arch.hidden_layers();
  if (static_cast<int>(sign_guesses.size()) != k)
    throw std::invalid_argument("sign_filter: need k guesses");

  for (int i = 1; i <= k; ++i) {
    // Suffix weight row G^{(i)} under the layer-i plan.
    Vec r(extracted.weights[k].row(0).begin(),
          extracted.weights[k].row(0).end());
    for (int q = k; q >= i + 1; --q) {
      if (relaxed)
        for (std::size_t j = 1; j < r.size(); ++j) r[j] = 0.0;
      r = vecmat(r, extracted.weights[q - 1]);
    }
    int common = 0;
    for (double gj : r) {
      if (std::abs(gj) <= z) return false;  // degenerate connection
      const int s = gj > 0 ? 1 : -1;
      if (common == 0)
        common = s;
      else if (s != common)
        return false;
    }
    if (common != sign_guesses[i - 1]) return false;

    // The suffix bias constant must oppose G so the planned neuron can sit
    // on the decision boundary while active.
    Vec v(arch.dims[i], 0.0);
    for (int q = i + 1; q <= k; ++q) {
      Vec pre = matvec(extracted.weights[q - 1], v);
      for (std::size_t j = 0; j < pre.size(); ++j) {
        pre[j] += extracted.biases[q - 1][j];
        if (relaxed && j > 0) pre[j] = 0.0;
      }
      v = std::move(pre);
    }
    const double b_suffix =
        dot(extracted.weights[k].row(0), v) + extracted.biases[k][0];
    if (std::abs(b_suffix) <= z) return false;
    if (common * b_suffix >= 0.0) return false;
  }
  return true;
}

double pmr(const ModelParameters& a, const ModelParameters& b, int samples,
           std::uint64_t seed, double domain_radius) {
  if (a.arch.input_dim() != b.arch.input_dim())
    throw std::invalid_argument("pmr: input dimension mismatch");
  if (samples <= 0) return 1.0;
  Rng rng(seed);
  const std::size_t d = a.arch.input_dim();
  int match = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.uniform_vec(d, -domain_radius, domain_radius);
    const int za = forward_value(a, x) > 0.0 ? 1 : 0;
    const int zb = forward_value(b, x) > 0.0 ? 1 : 0;
    match += za == zb;
  }
  return static_cast<double>(match) / samples;
}

// ---------------------------------------------------------------------------
// Full attack
// ---------------------------------------------------------------------------

namespace {

struct Assignment {
  std::vector<std::vector<int>> groups;  // tuple indices per hidden layer
  int out_tuple = -1;
};

void choose_combinations(const std::vector<int>& pool, int want,
                         std::vector<int>& cur, std::size_t start,
                         const std::function<void(const std::vector<int>&)>& cb,
                         const std::function<bool()>& full) {
  if (full()) return;
  if (static_cast<int>(cur.size()) == want) {
    cb(cur);
    return;
  }
  const int need = want - static_cast<int>(cur.size());
  for (std::size_t p = start; p + need <= pool.size(); ++p) {
    cur.push_back(pool[p]);
    choose_combinations(pool, want, cur, p + 1, cb, full);
    cur.pop_back();
    if (full()) return;
  }
}

std::vector<Assignment> enumerate_assignments(const Architecture& arch, int n_tuples,
                                              long cap) {
  const int k = arch.hidden_layers();
  std::vector<Assignment> out;
  if (cap <= 0) return out;
  std::vector<int> pool(n_tuples);
  std::iota(pool.begin(), pool.end(), 0);

  std::function<bool()> full = [&] {
    return static_cast<long>(out.size()) >= cap;
  };
  std::function<void(int, const std::vector<int>&,
                     std::vector<std::vector<int>>&)>
      per_layer = [&](int layer, const std::vector<int>& remaining,
                      std::vector<std::vector<int>>& groups) {
        if (full()) return;
        if (layer > k) {
          Assignment a;
          a.groups = groups;
          a.out_tuple = remaining.front();  // highest-occurrence unused
          out.push_back(std::move(a));
          return;
        }
        std::vector<int> cur;
        choose_combinations(
            remaining, arch.dims[layer], cur, 0,
            [&](const std::vector<int>& comb) {
              std::vector<int> next;
              next.reserve(remaining.size() - comb.size());
              std::set_difference(remaining.begin(), remaining.end(),
                                  comb.begin(), comb.end(),
                                  std::back_inserter(next));
              groups.push_back(comb);
              per_layer(layer + 1, next, groups);
              groups.pop_back();
            },
            full);
      };
  std::vector<std::vector<int>> groups;
  per_layer(1, pool, groups);
  return out;
}

struct RankingSet {
  std::vector<Vec> inputs;
  std::vector<int> labels;
  std::size_t fresh_from = 0;  // tail entries drawn uniformly
};

struct RankScore {
  double combined = 1.0;  // transcript + fresh; boundary-heavy, sharp
  double fresh = 1.0;     // uniform samples only; reported as the PMR
};

RankScore ranked_pmr(const ModelParameters& m, const RankingSet& rs) {
  if (rs.inputs.empty()) return {};
  int match = 0, fresh_match = 0;
  for (std::size_t i = 0; i < rs.inputs.size(); ++i) {
    const int z = forward_value(m, rs.inputs[i]) > 0.0 ? 1 : 0;
    const int ok = z == rs.labels[i];
    match += ok;
    if (i >= rs.fresh_from) fresh_match += ok;
  }
  RankScore s;
  s.combined = static_cast<double>(match) / rs.inputs.size();
  const std::size_t fresh_n = rs.inputs.size() - rs.fresh_from;
  s.fresh = fresh_n ? static_cast<double>(fresh_match) / fresh_n : s.combined;
  return s;
}

}  // namespace

std::string AttackReport::to_text() const {
  std::ostringstream os;
  os << "architecture        " << arch << "\n"
     << "status              " << status << "\n";
  if (!message.empty()) os << "note                " << message << "\n";
  os << "epsilon             " << epsilon << "\n"
     << "domain radius       " << domain_radius << "\n"
     << "probe stride        " << probe_stride << "\n"
     << "phi / d_phi         " << phi << " / " << d_phi << "\n"
     << "points multiplier   " << points_multiplier << "\n"
     << "seed                " << seed << "\n"
     << "oracle queries      " << query_count << "\n"
     << "boundary points     " << points_found << " of " << points_requested
     << " (" << points_failed << " failed)\n"
     << "tuples recovered    " << tuples_recovered << "\n"
     << "tuples after dedup  " << tuples_after_dedup << "\n"
     << "N_valid             " << n_valid << "\n"
     << "anchor coordinate   " << anchor << "\n"
     << "candidates          " << candidates_enumerated << "\n"
     << "  rejected anchor   " << rejected_anchor << "\n"
     << "  rejected solve    " << rejected_degenerate << "\n"
     << "  rejected biases   " << rejected_singular << "\n"
     << "  signature passed  " << signature_passed << "\n"
     << "  sign passed       " << sign_passed << "\n"
     << "  survivors         " << survivors << "\n"
     << "best PMR            " << best_pmr << "\n"
     << "best candidate      " << best_candidate_index << "\n"
     << "wall seconds        " << wall_seconds << "\n";
  return os.str();
}

AttackResult run_attack(HardLabelOracle& oracle, const Architecture& arch,
                        const AttackConfig& cfg,
                        std::vector<RecoveredTuple> resume_tuples) {
  const auto t0 = std::chrono::steady_clock::now();
  arch.validate();
  const int k = arch.hidden_layers();
  const int n = arch.neuron_count();
  const int d0 = arch.input_dim();

  AttackResult result;
  AttackReport& rep = result.report;
  rep.arch = arch.to_string();
  rep.epsilon = cfg.epsilon;
  rep.domain_radius = cfg.domain_radius;
  rep.points_multiplier = cfg.points_multiplier;
  rep.phi = cfg.phi;
  rep.seed = cfg.seed;
  const int d_phi = cfg.d_phi >= 0 ? cfg.d_phi : std::max(1, d0 / 100);
  rep.d_phi = d_phi;

  RecoveryConfig rcfg;
  rcfg.probe_stride = cfg.probe_stride > 0
                          ? cfg.probe_stride
                          : auto_probe_stride(k, cfg.domain_radius);
  rcfg.epsilon = cfg.epsilon;
  rcfg.max_expansions = cfg.max_expansions;
  rep.probe_stride = rcfg.probe_stride;

  oracle.enable_reservoir(cfg.reservoir, cfg.seed ^ 0x7265736572766f69ull);

  auto finish = [&](AttackStatus st, std::string msg) -> AttackResult& {
    result.status = st;
    rep.status = st == AttackStatus::Success ? "success"
                 : st == AttackStatus::InsufficientData ? "insufficient-data"
                                                        : "no-survivor";
    rep.message = std::move(msg);
    rep.query_count = oracle.queries();
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
  };

  std::vector<RecoveredTuple> dedup;
  if (!resume_tuples.empty()) {
    dedup = dedup_tuples(std::move(resume_tuples), {cfg.phi, d_phi},
                         cfg.majority_margin);
    rep.tuples_recovered = static_cast<int>(dedup.size());
  } else {
    // Step 1: decision boundary points.
    if (n > 26) throw std::invalid_argument("neuron count too large");
    const long target = static_cast<long>(cfg.points_multiplier) * (1L << n);
    rep.points_requested = static_cast<int>(target);
    SearchConfig scfg;
    scfg.epsilon = cfg.epsilon;
    scfg.initial_stride = cfg.initial_stride;
    scfg.max_expansions = cfg.max_expansions;
    scfg.domain_radius = cfg.domain_radius;
    scfg.rng_seed = cfg.seed;
    CollectStats cstats;
    auto points = collect_boundary_points(oracle, static_cast<int>(target),
                                          scfg, &cstats);
    rep.points_found = static_cast<int>(points.size());
    rep.points_failed = cstats.failures;

    // Step 2: recover the normalized signature.
    std::vector<RecoveredTuple> raw;
    raw.reserve(points.size());
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
      auto signs = recover_signs(oracle, points[idx], rcfg);
      if (!signs) continue;
      auto t = recover_tuple(oracle, points[idx], *signs, rcfg);
      if (!t) continue;
      t->source_points = {static_cast<int>(idx)};
      raw.push_back(std::move(*t));
    }
    rep.tuples_recovered = static_cast<int>(raw.size());
    dedup =
        dedup_tuples(std::move(raw), {cfg.phi, d_phi}, cfg.majority_margin);
  }

  std::stable_sort(dedup.begin(), dedup.end(),
                   [](const RecoveredTuple& a, const RecoveredTuple& b) {
                     return a.occurrence > b.occurrence;
                   });
  result.tuples = dedup;
  const int n_tuples = static_cast<int>(dedup.size());
  rep.tuples_after_dedup = n_tuples;
  for (const auto& t : dedup) rep.n_valid += t.occurrence > 1;

  if (n_tuples < n + 1) {
    std::ostringstream msg;
    msg << "need " << n + 1 << " distinct tuples, recovered " << n_tuples;
    return finish(AttackStatus::InsufficientData, msg.str());
  }

  // Steps 3-5: enumerate candidates, recover parameters, filter.
  const long sign_space = 1L << k;
  const long assignment_cap =
      std::max<long>(cfg.max_candidates > 0
                         ? (cfg.max_candidates + sign_space - 1) / sign_space
                         : 0,
                     0);
  const auto assignments = enumerate_assignments(arch, n_tuples, assignment_cap);
  const long total = std::min<long>(
      static_cast<long>(assignments.size()) * sign_space, cfg.max_candidates);

  // Ranking data: transcript reservoir plus a batch of fresh metered samples
  // shared by every candidate.
  RankingSet ranking;
  for (auto& [x, z] : oracle.reservoir_snapshot()) {
    ranking.inputs.push_back(std::move(x));
    ranking.labels.push_back(z);
  }
  ranking.fresh_from = ranking.inputs.size();
  {
    Rng rng(cfg.seed ^ 0x70726d7261746f72ull);
    for (int s = 0; s < cfg.pmr_samples; ++s) {
      Vec x = rng.uniform_vec(d0, -cfg.domain_radius, cfg.domain_radius);
      ranking.labels.push_back(oracle.query(x));
      ranking.inputs.push_back(std::move(x));
    }
  }

  FilterConfig fcfg;
  fcfg.cmp = {cfg.phi, d_phi};
  fcfg.adaptive_fraction = cfg.adaptive_fraction;
  fcfg.pmr_samples = cfg.pmr_samples;
  fcfg.pattern_budget = cfg.pattern_budget;

  struct Survivor {
    long index;
    ModelParameters params;
    std::vector<int> guesses;
    int anchor;
    RankScore score;
  };
  std::vector<Survivor> survivors;
  std::mutex mu;
  std::atomic<long> next{0};
  std::atomic<bool> stop{false};
  std::atomic<long> rej_anchor{0}, rej_degenerate{0}, rej_singular{0},
      sig_passed{0}, sign_passed{0};

  auto evaluate = [&](long ci) {
    const Assignment& asg = assignments[ci / sign_space];
    const long bits = ci % sign_space;

    // Selected tuples: hidden-layer groups then the output tuple.
    std::vector<const RecoveredTuple*> selected;
    for (const auto& g : asg.groups)
      for (int t : g) selected.push_back(&dedup[t]);
    selected.push_back(&dedup[asg.out_tuple]);

    // One consistent re-anchor coordinate for every selected tuple.
    int anchor = -1;
    for (int u = 0; u < d0 && anchor < 0; ++u) {
      bool ok = true;
      for (const auto* t : selected)
        if (!t->valid[u] || std::abs(t->gamma[u]) <= kZeroThreshold) {
          ok = false;
          break;
        }
      if (ok) anchor = u;
    }
    if (anchor < 0) {
      rej_anchor.fetch_add(1, std::memory_order_relaxed);
      return;
    }

    std::vector<int> guesses(k);
    for (int i = 0; i < k; ++i) guesses[i] = (bits >> i) & 1 ? -1 : 1;

    ModelParameters ext;
    ext.arch = arch;
    ext.weights.resize(k + 1);
    ext.biases.resize(k + 1);
    try {
      Matrix c_prev = Matrix::identity(d0);
      std::size_t cursor = 0;
      for (int i = 1; i <= k; ++i) {
        std::vector<const RecoveredTuple*> layer(
            selected.begin() + cursor, selected.begin() + cursor + arch.dims[i]);
        cursor += arch.dims[i];
        std::optional<Matrix> w;
        if (i == 1)
          w = recover_layer1(layer, guesses[0], anchor);
        else
          w = recover_layer_weights(layer, c_prev, guesses[i - 1], anchor);
        if (!w) {
          rej_degenerate.fetch_add(1, std::memory_order_relaxed);
          return;
        }
        c_prev = i == 1 ? *w : matmul(*w, c_prev);
        ext.weights[i - 1] = std::move(*w);
      }
      // Output layer: G^{(k+1)} = 1, no guess.
      const RecoveredTuple* out_t = selected.back();
      if (k == 0) {
        auto g = reanchor(out_t->gamma, anchor);
        if (!g) {
          rej_anchor.fetch_add(1, std::memory_order_relaxed);
          return;
        }
        Matrix w(1, d0);
        for (int u = 0; u < d0; ++u) w.at(0, u) = (*g)[u];
        ext.weights[0] = std::move(w);
      } else {
        auto w = recover_layer_weights({out_t}, c_prev, 1, anchor);
        if (!w) {
          rej_degenerate.fetch_add(1, std::memory_order_relaxed);
          return;
        }
        ext.weights[k] = std::move(*w);
      }
    } catch (const std::invalid_argument&) {
      rej_degenerate.fetch_add(1, std::memory_order_relaxed);
      return;
    }

    // Step 4: all biases at once.
    std::vector<ActivationPattern> plans;
    plans.reserve(selected.size());
    {
      std::size_t cursor = 0;
      for (int i = 1; i <= k; ++i)
        for (int j = 0; j < arch.dims[i]; ++j, ++cursor)
          plans.push_back(plan_pattern(arch, i, j, cfg.relaxed_plan));
      plans.push_back(full_pattern(arch));
    }
    auto biases = recover_biases(arch, ext.weights, selected, plans);
    if (!biases) {
      rej_singular.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    ext.biases = std::move(*biases);

    // Step 5: filters.
    const Verdict sig = signature_filter(ext, dedup, fcfg);
    if (sig == Verdict::Fail) return;
    sig_passed.fetch_add(1, std::memory_order_relaxed);
    if (!sign_filter(ext, guesses, cfg.relaxed_plan)) return;
    sign_passed.fetch_add(1, std::memory_order_relaxed);

    const RankScore score = ranked_pmr(ext, ranking);
    {
      std::lock_guard<std::mutex> lk(mu);
      survivors.push_back({ci, std::move(ext), guesses, anchor, score});
    }
    if (cfg.early_exit && score.fresh >= 1.0) stop.store(true);
  };

  const int workers =
      cfg.early_exit ? 1 : std::max(1, std::min(cfg.threads, 64));
  if (workers == 1) {
    for (long ci = 0; ci < total && !stop.load(); ++ci) evaluate(ci);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const long ci = next.fetch_add(1);
          if (ci >= total || stop.load()) return;
          evaluate(ci);
        }
      });
    for (auto& th : pool) th.join();
  }

  rep.candidates_enumerated = total;
  rep.rejected_anchor = rej_anchor.load();
  rep.rejected_degenerate = rej_degenerate.load();
  rep.rejected_singular = rej_singular.load();
  rep.signature_passed = sig_passed.load();
  rep.sign_passed = sign_passed.load();
  rep.survivors = static_cast<long>(survivors.size());

  if (survivors.empty()) return finish(AttackStatus::NoSurvivor, "");

  std::sort(survivors.begin(), survivors.end(),
            [](const Survivor& a, const Survivor& b) {
              if (a.score.combined != b.score.combined)
                return a.score.combined > b.score.combined;
              return a.index < b.index;
            });
  Survivor& best = survivors.front();
  rep.best_pmr = best.score.fresh;
  rep.best_candidate_index = best.index;
  rep.anchor = best.anchor;
  result.model = std::move(best.params);
  result.sign_guesses = std::move(best.guesses);
  return finish(AttackStatus::Success, "");
}

}  // namespace hlx
