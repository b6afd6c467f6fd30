#pragma once

#include <cstddef>
#include <vector>

namespace cbm::replay {

// Complete binary tree over `capacity` leaves (padded to a power of two) where
// every internal node holds the sum of its children. Leaves are non-negative.
class SumTree
{
public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t padded_capacity() const { return leaves_; }

  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return nodes_[leaves_ + leaf]; }
  double total() const { return nodes_[1]; }

  // Leaf whose cumulative range [prefix, prefix + value) contains `mass`,
  // never returning a zero-valued leaf while total() > 0.
  std::size_t find(double mass) const;

  // Max |node - (left + right)| over internal nodes.
  double max_internal_error() const;

  // Recomputes every internal node from the leaves.
  void rebuild();

private:
  std::size_t capacity_;
  std::size_t leaves_;
  std::vector<double> nodes_; // 1-based heap layout, leaves at [leaves_, 2 * leaves_)
};

// Same layout holding subtree maxima.
class MaxTree
{
public:
  explicit MaxTree(std::size_t capacity);

  void set(std::size_t leaf, double value);
  double max() const { return nodes_[1]; }

private:
  std::size_t leaves_;
  std::vector<double> nodes_;
};

} // namespace cbm::replay
