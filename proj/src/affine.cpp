#include "hlx/affine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hlx {

namespace {

// Base point on the label-0 side of the bracket; axis probes off this side
// read 1 exactly when the weight sign matches the probe sign, and 0-0 marks
// a zero weight.
Vec zero_side_point(const BoundaryPoint& bp) {
  if (bp.label_inside == 0) return bp.point;
  Vec p = bp.start;
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] += bp.s_fast * bp.direction[i];
  return p;
}

Vec axis(std::size_t d, std::size_t i, double sign) {
  Vec e(d, 0.0);
  e[i] = sign;
  return e;
}

}  // namespace

double auto_probe_stride(int hidden_layers, double domain_radius) {
  return hidden_layers == 0 ? 1e8 * domain_radius : 4e-6 * domain_radius;
}

std::optional<std::vector<int>> recover_signs(const HardLabelOracle& oracle,
                                              const BoundaryPoint& bp,
                                              const RecoveryConfig& cfg) {
  const Vec base = zero_side_point(bp);
  const std::size_t d = base.size();
  const double s = cfg.probe_stride;
  std::vector<int> signs(d, 0);
  Vec probe = base;
  for (std::size_t i = 0; i < d; ++i) {
    probe[i] = base[i] + s;
    const int zp = oracle.query(probe);
    probe[i] = base[i] - s;
    const int zm = oracle.query(probe);
    probe[i] = base[i];
    if (zp == 1 && zm == 1) return std::nullopt;  // not on the boundary
    signs[i] = zp == 1 ? 1 : (zm == 1 ? -1 : 0);
  }
  return signs;
}

std::optional<RecoveredTuple> recover_tuple(const HardLabelOracle& oracle,
                                            const BoundaryPoint& bp,
                                            const std::vector<int>& signs,
                                            const RecoveryConfig& cfg) {
  const Vec base = zero_side_point(bp);
  const std::size_t d = base.size();
  if (signs.size() != d)
    throw std::invalid_argument("recover_tuple: sign vector size");

  const auto anchor_it = std::find_if(signs.begin(), signs.end(),
                                      [](int s) { return s != 0; });
  if (anchor_it == signs.end()) return std::nullopt;  // all-zero gamma
  const std::size_t a = anchor_it - signs.begin();

  const double s_a = cfg.probe_stride;
  const double cap = cfg.effective_zero_threshold();
  Vec y = base;
  y[a] += signs[a] * s_a;  // label 1 by the anchor's sign probe

  RecoveredTuple t;
  t.gamma.assign(d, 0.0);
  t.valid.assign(d, 1);
  t.anchor_index = static_cast<int>(a);
  t.gamma[a] = signs[a];

  for (std::size_t i = 0; i < d; ++i) {
    if (i == a || signs[i] == 0) continue;
    // The boundary re-crossing lies along -sign(Gamma_i).
    Vec dir = axis(d, i, -signs[i]);
    auto cross = cross_boundary(oracle, y, 1, dir, s_a, cfg.epsilon,
                                cfg.max_expansions, cap);
    if (!cross) {
      // Disagreement with the axis-probe sign; the probe sign wins and the
      // coordinate is flagged.
      dir[i] = signs[i];
      cross = cross_boundary(oracle, y, 1, dir, s_a, cfg.epsilon,
                             cfg.max_expansions, cap);
      t.valid[i] = 0;
      t.partial = true;
      if (!cross) continue;  // unrecovered, gamma stays 0
    }
    const double ti = 0.5 * (cross->s_near + cross->s_far);
    if (ti <= 0.0 || ti > cap) {
      t.valid[i] = 0;
      t.partial = true;
      continue;
    }
    t.gamma[i] = signs[i] * (s_a / ti);
  }

  // Tighten the base point before reading off the bias: the residual there
  // enters beta amplified by |gamma|.
  const double gnorm = std::max(1.0, two_norm(t.gamma));
  BoundaryPoint refined = refine_boundary(oracle, bp, cfg.epsilon / gnorm);
  const Vec x = zero_side_point(refined);
  t.beta = -dot(t.gamma, x);
  t.point = x;
  return t;
}

VectorsEqualResult tuples_equal(const RecoveredTuple& a,
                                const RecoveredTuple& b,
                                const CompareConfig& cfg) {
  if (a.gamma.size() != b.gamma.size())
    throw std::invalid_argument("tuples_equal: dimension mismatch");
  const double scale =
      std::max({1.0, inf_norm(a.gamma), inf_norm(b.gamma)});
  const double phi = cfg.phi * scale;
  int mismatches = 0;
  for (std::size_t j = 0; j < a.gamma.size(); ++j) {
    const bool ok = a.valid[j] && b.valid[j] &&
                    std::abs(a.gamma[j] - b.gamma[j]) < phi;
    if (!ok) ++mismatches;
  }
  if (!(std::abs(a.beta - b.beta) < phi)) ++mismatches;
  return {mismatches <= cfg.d_phi, mismatches};
}

std::vector<RecoveredTuple> dedup_tuples(std::vector<RecoveredTuple> tuples,
                                         const CompareConfig& cfg,
                                         double majority_margin) {
  struct Cluster {
    RecoveredTuple rep;
    int count = 0;
    std::vector<int> sources;
  };
  std::vector<Cluster> clusters;

  // Pass 1: exact duplicates (d_phi = 0).
  const CompareConfig exact{cfg.phi, 0};
  for (auto& t : tuples) {
    bool placed = false;
    for (auto& c : clusters) {
      if (tuples_equal(c.rep, t, exact).equal) {
        c.count += t.occurrence;
        c.sources.insert(c.sources.end(), t.source_points.begin(),
                         t.source_points.end());
        placed = true;
        break;
      }
    }
    if (!placed) {
      Cluster c;
      c.count = t.occurrence;
      c.sources = t.source_points;
      c.rep = std::move(t);
      placed = true;
      clusters.push_back(std::move(c));
    }
  }

  // Pass 2: fold partially-wrong tuples into dominant clusters, iterating
  // to a fixpoint so the result is stable under re-runs.
  if (cfg.d_phi > 0) {
    bool merged = true;
    while (merged) {
      merged = false;
      for (std::size_t i = 0; i < clusters.size() && !merged; ++i) {
        for (std::size_t j = i + 1; j < clusters.size() && !merged; ++j) {
          if (!tuples_equal(clusters[i].rep, clusters[j].rep, cfg).equal)
            continue;
          std::size_t big = i, small = j;
          if (clusters[j].count > clusters[i].count) std::swap(big, small);
          if (clusters[big].count <
              majority_margin * clusters[small].count)
            continue;
          clusters[big].count += clusters[small].count;
          clusters[big].sources.insert(clusters[big].sources.end(),
                                       clusters[small].sources.begin(),
                                       clusters[small].sources.end());
          clusters.erase(clusters.begin() + small);
          merged = true;
        }
      }
    }
  }

  std::vector<RecoveredTuple> out;
  out.reserve(clusters.size());
  for (auto& c : clusters) {
    c.rep.occurrence = c.count;
    c.rep.source_points = std::move(c.sources);
    out.push_back(std::move(c.rep));
  }
  return out;
}

}  // namespace hlx
