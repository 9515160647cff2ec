#include "hlx/oracle.hpp"

namespace hlx {

int hard_label(const ModelParameters& m, std::span<const double> x,
               OracleStats& stats) {
  stats.query_count.fetch_add(1, std::memory_order_relaxed);
  return forward_value(m, x) > 0.0 ? 1 : 0;
}

int HardLabelOracle::query(std::span<const double> x) const {
  const int z = hard_label(model_, x, stats_);
  if (res_capacity_ > 0) {
    std::lock_guard<std::mutex> lk(res_mu_);
    ++res_seen_;
    if (reservoir_.size() < res_capacity_) {
      reservoir_.emplace_back(Vec(x.begin(), x.end()), z);
    } else {
      const std::uint64_t slot = res_rng_.next_u64() % res_seen_;
      if (slot < res_capacity_)
        reservoir_[slot] = {Vec(x.begin(), x.end()), z};
    }
  }
  return z;
}

void HardLabelOracle::enable_reservoir(std::size_t capacity,
                                       std::uint64_t seed) {
  std::lock_guard<std::mutex> lk(res_mu_);
  res_capacity_ = capacity;
  res_rng_ = Rng(seed);
  res_seen_ = 0;
  reservoir_.clear();
  reservoir_.reserve(capacity);
}

std::vector<std::pair<Vec, int>> HardLabelOracle::reservoir_snapshot() const {
  std::lock_guard<std::mutex> lk(res_mu_);
  return reservoir_;
}

}  // namespace hlx
