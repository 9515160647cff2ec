#include "hlx/boundary.hpp"

#include <cmath>
#include <stdexcept>

namespace hlx {

namespace {

Vec offset_point(std::span<const double> start, double s,
                 std::span<const double> dir) {
  Vec p(start.begin(), start.end());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += s * dir[i];
  return p;
}

// Bisection cannot resolve brackets below the float spacing at |s|.
double epsilon_floor(double lo, double hi) {
  const double m = std::max(std::abs(lo), std::abs(hi));
  return m * 0x1.0p-50;
}

// Keeps the flip condition at every step: the midpoint replaces whichever
// stride shares its label.
void bisect(const HardLabelOracle& oracle, std::span<const double> start,
            std::span<const double> dir, int inside_label, double& s_slow,
            double& s_fast, double epsilon) {
  const double eps = std::max(epsilon, epsilon_floor(s_slow, s_fast));
  while (std::abs(s_slow - s_fast) >= eps) {
    const double mid = 0.5 * (s_slow + s_fast);
    if (mid == s_slow || mid == s_fast) break;
    if (oracle.query(offset_point(start, mid, dir)) == inside_label)
      s_slow = mid;
    else
      s_fast = mid;
  }
}

}  // namespace

std::optional<BoundaryPoint> find_boundary(const HardLabelOracle& oracle,
                                           std::span<const double> start,
                                           std::span<const double> direction,
                                           const SearchConfig& cfg) {
  if (start.size() != direction.size())
    throw std::invalid_argument("find_boundary: dimension mismatch");
  double dn = 0.0;
  for (double d : direction) dn += d * d;
  if (dn == 0.0) throw std::invalid_argument("find_boundary: zero direction");

  const int z0 = oracle.query(start);
  const double s0 = cfg.stride(cfg.domain_radius);

  double s_slow = 0.0, s_fast = 0.0;
  bool bracketed = false;
  double stride = s0;
  for (int j = 0; j < cfg.max_expansions && !bracketed; ++j) {
    for (double sgn : {1.0, -1.0}) {
      const double s = sgn * stride;
      if (oracle.query(offset_point(start, s, direction)) != z0) {
        s_fast = s;
        s_slow = (j == 0) ? 0.0 : sgn * stride * 0.5;
        bracketed = true;
        break;
      }
    }
    stride *= 2.0;
  }
  if (!bracketed) return std::nullopt;

  bisect(oracle, start, direction, z0, s_slow, s_fast, cfg.epsilon);

  BoundaryPoint bp;
  bp.start.assign(start.begin(), start.end());
  bp.direction.assign(direction.begin(), direction.end());
  bp.s_slow = s_slow;
  bp.s_fast = s_fast;
  bp.label_inside = z0;
  bp.point = offset_point(start, s_slow, direction);
  return bp;
}

BoundaryPoint refine_boundary(const HardLabelOracle& oracle, BoundaryPoint bp,
                              double epsilon) {
  bisect(oracle, bp.start, bp.direction, bp.label_inside, bp.s_slow,
         bp.s_fast, epsilon);
  bp.point = offset_point(bp.start, bp.s_slow, bp.direction);
  return bp;
}

std::optional<CrossResult> cross_boundary(const HardLabelOracle& oracle,
                                          std::span<const double> base,
                                          int base_label,
                                          std::span<const double> direction,
                                          double initial_stride,
                                          double epsilon, int max_expansions,
                                          double stride_limit) {
  double s_near = 0.0, s_far = 0.0;
  bool bracketed = false;
  double stride = initial_stride;
  for (int j = 0; j < max_expansions && stride <= stride_limit; ++j) {
    if (oracle.query(offset_point(base, stride, direction)) != base_label) {
      s_far = stride;
      s_near = (j == 0) ? 0.0 : stride * 0.5;
      bracketed = true;
      break;
    }
    stride *= 2.0;
  }
  if (!bracketed) return std::nullopt;

  bisect(oracle, base, direction, base_label, s_near, s_far, epsilon);
  return CrossResult{s_near, s_far};
}

std::vector<BoundaryPoint> collect_boundary_points(
    const HardLabelOracle& oracle, int count, const SearchConfig& cfg,
    CollectStats* stats) {
  if (count < 1) throw std::invalid_argument("collect: count must be >= 1");
  const std::size_t d = oracle.arch().input_dim();
  Rng rng(cfg.rng_seed);
  std::vector<BoundaryPoint> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    const Vec start =
        rng.uniform_vec(d, -cfg.domain_radius, cfg.domain_radius);
    const Vec dir = rng.sphere_direction(d);
    auto bp = find_boundary(oracle, start, dir, cfg);
    if (stats) ++stats->attempts;
    if (bp)
      out.push_back(std::move(*bp));
    else if (stats)
      ++stats->failures;
  }
  return out;
}

}  // namespace hlx
