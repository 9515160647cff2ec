#pragma once

#include <optional>
#include <vector>

#include "hlx/boundary.hpp"
#include "hlx/model.hpp"
#include "hlx/oracle.hpp"

namespace hlx {

struct RecoveryConfig {
  /// Magnitude of the axis probes (the step off the boundary). <= 0 picks a
  /// depth-dependent default, see auto_probe_stride.
  double probe_stride = 0.0;
  double epsilon = 1e-12;
  /// Crossing strides beyond this bound declare the coordinate zero-weight.
  /// <= 0: 1e9 * probe_stride.
  double zero_threshold = 0.0;
  int max_expansions = 40;

  double effective_zero_threshold() const {
    return zero_threshold > 0 ? zero_threshold : probe_stride * 1e9;
  }
};

/// Axis probes must stay inside one activation region, so they scale with
/// the region size: tiny for deep victims, effectively unbounded for affine
/// (0-deep) ones where relative stride precision is all that matters.
double auto_probe_stride(int hidden_layers, double domain_radius);

/// One recovered normalized affine transformation (Gamma_P, B_P) /
/// |first significant coefficient|.
struct RecoveredTuple {
  Vec gamma;
  double beta = 0.0;
  int anchor_index = -1;
  int occurrence = 1;                // m_P after dedup
  std::vector<std::uint8_t> valid;   // per-coordinate confidence mask
  bool partial = false;              // any unrecovered/overridden coordinate
  Vec point;                         // boundary point the tuple came from
  std::vector<int> source_points;
};

/// Sign of each Gamma coefficient from single-axis probes off a boundary
/// point: +1 / -1 / 0 (zero weight). Nullopt when both probes on some axis
/// read label 1, which means the point is not on the boundary (or the
/// pattern changed under the probe).
std::optional<std::vector<int>> recover_signs(const HardLabelOracle& oracle,
                                              const BoundaryPoint& bp,
                                              const RecoveryConfig& cfg);

/// Weight-ratio recovery: step off the boundary along the anchor axis, then
/// bisect back to the boundary along every other significant axis. The
/// returned tuple is anchored at the first non-zero-sign coordinate
/// (|gamma[anchor]| == 1).
std::optional<RecoveredTuple> recover_tuple(const HardLabelOracle& oracle,
                                            const BoundaryPoint& bp,
                                            const std::vector<int>& signs,
                                            const RecoveryConfig& cfg);

/// Per-pair threshold: cfg.phi * max(1, |a|_inf, |b|_inf); coordinates
/// masked invalid on either side count as mismatches.
VectorsEqualResult tuples_equal(const RecoveredTuple& a,
                                const RecoveredTuple& b,
                                const CompareConfig& cfg);

/// Two-pass duplicate filtering: exact clustering at d_phi = 0, then a
/// fixpoint merge pass at the configured d_phi that folds partially-wrong
/// tuples into clusters with dominant occurrence counts.
std::vector<RecoveredTuple> dedup_tuples(std::vector<RecoveredTuple> tuples,
                                         const CompareConfig& cfg,
                                         double majority_margin = 3.0);

}  // namespace hlx
