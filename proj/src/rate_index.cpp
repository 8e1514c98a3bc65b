#include "gradspin/rate_index.hpp"

#include <bit>
#include <stdexcept>

namespace gradspin {

RateIndex::RateIndex(std::size_t size) : values_(size, 0.0), tree_(size + 1, 0.0) {
  top_bit_ = size == 0 ? 0 : std::bit_floor(size);
}

RateIndex::RateIndex(std::span<const double> weights)
    : values_(weights.begin(), weights.end()), tree_(weights.size() + 1, 0.0) {
  for (double w : values_) {
    if (!(w >= 0.0)) throw std::invalid_argument("rate index weights must be non-negative");
  }
  top_bit_ = values_.empty() ? 0 : std::bit_floor(values_.size());
  rebuild();
}

void RateIndex::rebuild() {
  const std::size_t n = values_.size();
  for (std::size_t i = 1; i <= n; ++i) tree_[i] = values_[i - 1];
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n) tree_[parent] += tree_[i];
  }
  updates_since_rebuild_ = 0;
}

void RateIndex::set(std::size_t i, double w) {
  if (!(w >= 0.0)) throw std::invalid_argument("rate index weights must be non-negative");
  const double delta = w - values_.at(i);
  values_[i] = w;
  if (delta == 0.0) return;
  for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
  if (++updates_since_rebuild_ >= 64 * values_.size() + 1024) rebuild();
}

double RateIndex::prefix(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t j = std::min(i, values_.size()); j > 0; j -= j & (~j + 1)) acc += tree_[j];
  return acc;
}

double RateIndex::total() const { return prefix(values_.size()); }

std::size_t RateIndex::find(double target) const {
  std::size_t pos = 0;
  double remaining = target;
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= remaining) {
      pos = next;
      remaining -= tree_[next];
    }
  }
  // pos entries have prefix <= target; entry pos is the selected one. Rounding
  // can land on a zero-weight entry or run off the end: step to a neighbour
  // with positive weight.
  if (pos >= values_.size()) pos = values_.size() - 1;
  if (values_[pos] > 0.0) return pos;
  for (std::size_t j = pos; j-- > 0;) {
    if (values_[j] > 0.0) return j;
  }
  for (std::size_t j = pos + 1; j < values_.size(); ++j) {
    if (values_[j] > 0.0) return j;
  }
  throw std::logic_error("rate index: no positive weight to select");
}

}  // namespace gradspin
