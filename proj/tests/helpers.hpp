#pragma once

#include <vector>

#include "hlx/affine.hpp"
#include "hlx/model.hpp"

namespace hlxtest {

inline hlx::ModelParameters make_model(
    std::vector<int> dims,
    std::vector<std::vector<std::vector<double>>> weights,
    std::vector<std::vector<double>> biases) {
  hlx::ModelParameters m;
  m.arch.dims = std::move(dims);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    hlx::Matrix w(weights[i].size(), weights[i][0].size());
    for (std::size_t r = 0; r < w.rows; ++r)
      for (std::size_t c = 0; c < w.cols; ++c) w.at(r, c) = weights[i][r][c];
    m.weights.push_back(std::move(w));
    m.biases.push_back(biases[i]);
  }
  m.validate();
  return m;
}

inline hlx::RecoveredTuple make_tuple(hlx::Vec gamma, double beta,
                                      int occurrence = 1) {
  hlx::RecoveredTuple t;
  t.anchor_index = hlx::first_significant(gamma);
  t.valid.assign(gamma.size(), 1);
  t.gamma = std::move(gamma);
  t.beta = beta;
  t.occurrence = occurrence;
  return t;
}

/// Noise-free tuple for a plan pattern, plus a point satisfying
/// gamma . x + beta = 0 (minimum-norm solution).
inline hlx::RecoveredTuple analytic_tuple(const hlx::ModelParameters& victim,
                                          const hlx::ActivationPattern& plan,
                                          int occurrence = 2) {
  const auto t = hlx::normalize_tuple(hlx::affine_for_pattern(victim, plan));
  hlx::RecoveredTuple r = make_tuple(t.gamma, t.beta, occurrence);
  double n2 = 0.0;
  for (double g : t.gamma) n2 += g * g;
  r.point.assign(t.gamma.size(), 0.0);
  for (std::size_t i = 0; i < t.gamma.size(); ++i)
    r.point[i] = -t.beta * t.gamma[i] / n2;
  return r;
}

}  // namespace hlxtest
