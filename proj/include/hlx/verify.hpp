#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hlx/model.hpp"

namespace hlx {

/// Neuron correspondence between a victim and an extracted model, plus the
/// theoretical parameters the idealized attack would produce on the permuted
/// victim.
struct Alignment {
  /// perm[i][j] = victim neuron matched to extracted neuron j in hidden
  /// layer i+1.
  std::vector<std::vector<int>> perm;
  ModelParameters permuted_victim;
  ModelParameters theoretical;
  bool ambiguous = false;  // some match decided by a tie-break below 1e-6
};

/// Full-activation cumulative products C^{(i)} = A^{(i)} ... A^{(1)},
/// i = 1..k+1.
std::vector<Matrix> cumulative_products(const ModelParameters& m);

/// Closed-form parameters of the idealized extraction, anchored at input
/// coordinate `anchor`: every hidden neuron is rescaled by the first-column
/// magnitude of its cumulative product row.
ModelParameters theoretical_extraction(const ModelParameters& victim,
                                       int anchor = 0);

/// The output scale constant c with f_extracted = c * f_victim.
double closed_form_scale(const ModelParameters& victim, int anchor = 0);

/// Greedy row matching by absolute cosine similarity of cumulative-product
/// rows, then theoretical parameters of the permuted victim.
Alignment align(const ModelParameters& victim,
                const ModelParameters& extracted, int anchor = 0);

double max_param_error(const ModelParameters& a, const ModelParameters& b);

/// Worst-case |f_a(x) - f_b(x)| over the ||x||_inf <= R cube by interval
/// propagation: incoming error widths pass through |A| and ReLU (1-Lipschitz),
/// parameter deltas couple to layer input magnitude bounds.
double error_bound(const ModelParameters& theoretical,
                   const ModelParameters& extracted, double domain_radius);

struct ScaleEstimate {
  double c = 0.0;           // median of f_ext / f_victim
  double spread_iqr = 0.0;  // interquartile range / |median|
  double spread_range = 0.0;
  int used = 0;  // samples above the magnitude cutoff
};

std::optional<ScaleEstimate> estimate_scale(const ModelParameters& victim,
                                            const ModelParameters& extracted,
                                            int samples, std::uint64_t seed,
                                            double domain_radius,
                                            double cutoff = 1e-6);

struct EquivalenceReport {
  double epsilon_bound = 0.0;
  double max_param_error = 0.0;
  double scale_c = 0.0;
  double pmr = 0.0;
  std::uint64_t query_count = 0;
};

}  // namespace hlx
