#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gradspin {

/// Fenwick tree over non-negative weights: O(log n) point update, prefix sum
/// and inverse-prefix search. Used for proportional event selection.
class RateIndex {
public:
  explicit RateIndex(std::size_t size = 0);
  explicit RateIndex(std::span<const double> weights);

  std::size_t size() const noexcept { return values_.size(); }
  double weight(std::size_t i) const { return values_.at(i); }
  std::span<const double> weights() const noexcept { return values_; }

  /// Sets entry i (must be >= 0). Triggers a periodic full rebuild so that
  /// accumulated rounding in the partial sums stays bounded.
  void set(std::size_t i, double w);

  /// Sum of entries [0, i).
  double prefix(std::size_t i) const;
  double total() const;

  /// Smallest index i with prefix(i + 1) > target, restricted to entries with
  /// positive weight. Requires 0 <= target < total().
  std::size_t find(double target) const;

  /// Recomputes the partial sums from the stored entries.
  void rebuild();

private:
  std::vector<double> values_;
  std::vector<double> tree_;  // 1-based
  std::size_t top_bit_ = 0;
  std::size_t updates_since_rebuild_ = 0;
};

}  // namespace gradspin
