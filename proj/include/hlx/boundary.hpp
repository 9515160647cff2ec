#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hlx/oracle.hpp"

namespace hlx {

struct SearchConfig {
  double epsilon = 1e-12;      // bracket precision, > 0
  double initial_stride = 0;   // <= 0: domain_radius / 64
  int max_expansions = 40;     // cap on stride doublings per direction
  double domain_radius = 1.0;  // sampling radius for starts/directions
  std::uint64_t rng_seed = 1;

  double stride(double fallback_radius) const {
    return initial_stride > 0 ? initial_stride : fallback_radius / 64.0;
  }
};

/// A point within epsilon of the decision hyperplane, kept on the same-label
/// side as the start: point = start + s_slow * direction.
struct BoundaryPoint {
  Vec point;
  Vec start;
  Vec direction;
  double s_slow = 0.0;
  double s_fast = 0.0;
  int label_inside = 0;  // hard label at `point` (== label at start)
};

/// Line search from `start` along +/-direction with doubling strides until a
/// label flip brackets the boundary, then bisection until
/// |s_slow - s_fast| < epsilon. Not-found when no flip shows up within
/// max_expansions doublings on either side.
std::optional<BoundaryPoint> find_boundary(const HardLabelOracle& oracle,
                                           std::span<const double> start,
                                           std::span<const double> direction,
                                           const SearchConfig& cfg);

/// Continue bisecting an existing bracket down to a finer precision.
BoundaryPoint refine_boundary(const HardLabelOracle& oracle, BoundaryPoint bp,
                              double epsilon);

struct CrossResult {
  double s_near = 0.0;  // same label as base
  double s_far = 0.0;   // flipped label
};

/// One-sided crossing search: from `base` (whose label is `base_label`)
/// along `direction` only, strides initial, 2*initial, ... capped at
/// stride_limit. Bisects down to epsilon (limited by float spacing).
std::optional<CrossResult> cross_boundary(const HardLabelOracle& oracle,
                                          std::span<const double> base,
                                          int base_label,
                                          std::span<const double> direction,
                                          double initial_stride,
                                          double epsilon, int max_expansions,
                                          double stride_limit);

struct CollectStats {
  int attempts = 0;
  int failures = 0;
};

/// Draws `count` (start, direction) pairs -- starts uniform in the
/// [-R, R]^d hypercube, directions uniform on the unit sphere -- and returns
/// the successful searches. Deterministic given cfg.rng_seed.
std::vector<BoundaryPoint> collect_boundary_points(
    const HardLabelOracle& oracle, int count, const SearchConfig& cfg,
    CollectStats* stats = nullptr);

}  // namespace hlx
