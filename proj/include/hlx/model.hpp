#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hlx/linalg.hpp"

namespace hlx {

/// Coefficients below this magnitude are treated as zero when picking the
/// anchor of a normalized affine tuple. Recovered coefficients carry O(eps)
/// noise, so exact-zero tests are meaningless.
inline constexpr double kZeroThreshold = 1e-10;

/// Layer widths [d_0, d_1, ..., d_{k+1}]. Scalar output only (d_{k+1} = 1).
struct Architecture {
  std::vector<int> dims;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int hidden_layers() const { return static_cast<int>(dims.size()) - 2; }
  int layer_width(int i) const { return dims[i]; }  // i in [0, k+1]

  /// n = sum of hidden layer widths.
  int neuron_count() const {
    int n = 0;
    for (int i = 1; i + 1 < static_cast<int>(dims.size()); ++i) n += dims[i];
    return n;
  }

  void validate() const;  // throws std::invalid_argument
  bool operator==(const Architecture&) const = default;

  std::string to_string() const;                    // "d0-d1-...-dk+1"
  static Architecture parse(const std::string& s);  // throws on malformed spec
};

/// Neuron states per hidden layer, bit j set iff the pre-activation of
/// neuron j is strictly positive.
struct ActivationPattern {
  std::vector<std::vector<std::uint8_t>> layers;

  bool operator==(const ActivationPattern&) const = default;
  /// Compact key for hashing/counting.
  std::string key() const;
  bool all_active() const;
};

struct ModelParameters {
  Architecture arch;
  std::vector<Matrix> weights;  // weights[i]: d_{i+1} x d_i, layer i+1
  std::vector<Vec> biases;      // biases[i]: d_{i+1}

  int parameter_count() const;
  void validate() const;  // shapes + finiteness
};

struct ForwardResult {
  double value = 0.0;
  ActivationPattern pattern;
};

/// Layer-by-layer evaluation with ReLU, recording each pre-activation sign.
ForwardResult forward(const ModelParameters& m, std::span<const double> x);
/// Evaluation without pattern bookkeeping.
double forward_value(const ModelParameters& m, std::span<const double> x);

/// The local affine map (Gamma_P, B_P) the network restricts to inside the
/// activation region described by `pattern`.
struct AffineTuple {
  Vec gamma;
  double beta = 0.0;
};

AffineTuple affine_for_pattern(const ModelParameters& m,
                               const ActivationPattern& pattern);

/// Index of the first coefficient with |gamma_j| > z, or -1 if none.
int first_significant(std::span<const double> gamma,
                      double z = kZeroThreshold);

/// Divides by |first significant coefficient|; tuples with all-zero gamma
/// are returned unchanged.
AffineTuple normalize_tuple(AffineTuple t, double z = kZeroThreshold);

std::vector<AffineTuple> model_signature(
    const ModelParameters& m, std::span<const ActivationPattern> patterns,
    double z = kZeroThreshold);

/// Untrained victim with parameters drawn uniform in [lo, hi].
ModelParameters generate_model(const Architecture& arch, std::uint64_t seed,
                               double lo = -1.0, double hi = 1.0);

}  // namespace hlx
