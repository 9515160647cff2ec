#pragma once

#include <cmath>
#include <cstdint>

#include "hlx/extraction.hpp"

namespace hlx {

/// Order-of-magnitude forecast of attack cost: roughly c_eps queries per
/// bisection, c_n * 2^n boundary points, d_0 tuple coordinates each.
struct AttackBudget {
  int c_eps = 0;
  int c_n = 0;
  std::uint64_t predicted_queries = 0;
  long double predicted_candidates = 0;

  static AttackBudget estimate(const Architecture& arch, double epsilon,
                               double domain_radius, int c_n) {
    AttackBudget b;
    b.c_n = c_n;
    const double span = 2.0 * domain_radius;
    b.c_eps = static_cast<int>(std::ceil(std::log2(span / epsilon))) + 4;
    const int n = arch.neuron_count();
    const int k = arch.hidden_layers();
    long double q = static_cast<long double>(b.c_eps) * c_n *
                    std::pow(2.0L, n) * arch.input_dim();
    b.predicted_queries =
        q > 1e18L ? UINT64_MAX : static_cast<std::uint64_t>(q);

    bool sat = false;
    const std::uint64_t h = count_max_patterns(arch, &sat);
    const long double n_tuples =
        sat ? std::pow(2.0L, n)
            : std::min<long double>(static_cast<long double>(h),
                                    c_n * std::pow(2.0L, n));
    b.predicted_candidates =
        std::pow(n_tuples, n + 1) * std::pow(2.0L, k);
    return b;
  }
};

}  // namespace hlx
