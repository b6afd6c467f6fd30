#include "cbm/replay/sum_tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cbm::replay {

namespace {

std::size_t padded(std::size_t capacity)
{
  if (capacity == 0) {
    throw std::invalid_argument("tree capacity must be > 0");
  }
  return std::bit_ceil(capacity);
}

} // namespace

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), leaves_(padded(capacity)), nodes_(2 * leaves_, 0.0) {}

void SumTree::set(std::size_t leaf, double value)
{
  if (leaf >= capacity_) {
    throw std::out_of_range("SumTree::set: leaf " + std::to_string(leaf));
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("SumTree::set: value must be finite and >= 0");
  }
  std::size_t i = leaves_ + leaf;
  nodes_[i] = value;
  // Recompute parents from children rather than adding deltas, so rounding does not drift.
  for (i /= 2; i >= 1; i /= 2) {
    nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }
}

std::size_t SumTree::find(double mass) const
{
  std::size_t i = 1;
  while (i < leaves_) {
    double const left = nodes_[2 * i];
    double const right = nodes_[2 * i + 1];
    if ((mass < left && left > 0.0) || right <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return std::min(i - leaves_, capacity_ - 1);
}

double SumTree::max_internal_error() const
{
  double err = 0.0;
  for (std::size_t i = 1; i < leaves_; ++i) {
    err = std::max(err, std::abs(nodes_[i] - (nodes_[2 * i] + nodes_[2 * i + 1])));
  }
  return err;
}

void SumTree::rebuild()
{
  for (std::size_t i = leaves_; i-- > 1;) {
    nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }
}

MaxTree::MaxTree(std::size_t capacity) : leaves_(padded(capacity)), nodes_(2 * leaves_, 0.0) {}

void MaxTree::set(std::size_t leaf, double value)
{
  std::size_t i = leaves_ + leaf;
  nodes_[i] = value;
  for (i /= 2; i >= 1; i /= 2) {
    nodes_[i] = std::max(nodes_[2 * i], nodes_[2 * i + 1]);
  }
}

} // namespace cbm::replay
