#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "hlx/model.hpp"
#include "hlx/rng.hpp"

namespace hlx {

struct OracleStats {
  std::atomic<std::uint64_t> query_count{0};
};

/// Hard label: 1 iff f(x) > 0, else 0.
int hard_label(const ModelParameters& m, std::span<const double> x,
               OracleStats& stats);

/// The only victim-model surface the attack sees. Every query bumps the
/// meter with a linearizable increment; an optional reservoir keeps a
/// uniform sample of (input, label) pairs for candidate ranking.
class HardLabelOracle {
 public:
  explicit HardLabelOracle(const ModelParameters& m) : model_(m) {}

  int query(std::span<const double> x) const;

  std::uint64_t queries() const {
    return stats_.query_count.load(std::memory_order_relaxed);
  }

  void enable_reservoir(std::size_t capacity, std::uint64_t seed);
  std::vector<std::pair<Vec, int>> reservoir_snapshot() const;

  const Architecture& arch() const { return model_.arch; }

 private:
  const ModelParameters& model_;
  mutable OracleStats stats_;

  mutable std::mutex res_mu_;
  std::size_t res_capacity_ = 0;
  mutable std::uint64_t res_seen_ = 0;
  mutable Rng res_rng_{0};
  mutable std::vector<std::pair<Vec, int>> reservoir_;
};

}  // namespace hlx
