#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cbm/errors.hpp"
#include "cbm/numerics/tensor.hpp"

namespace cbm::agent {

using numerics::Tensor2;

// Quantile midpoints tau_i = (2i - 1) / (2N), i = 1..N.
class QuantileSet
{
public:
  explicit QuantileSet(std::size_t n);

  std::size_t size() const { return midpoints_.size(); }
  double operator[](std::size_t i) const { return midpoints_[i]; }
  std::span<double const> midpoints() const { return midpoints_; }

private:
  std::vector<double> midpoints_;
};

// How a return distribution is collapsed to one number for action ranking.
struct RiskProfile
{
  enum class Kind
  {
    kLowerTail, // mean of quantiles with tau <= cutoff
    kMean,
    kUpperTail, // mean of quantiles with tau >= cutoff
  };

  Kind kind = Kind::kMean;
  double cutoff = 1.0;

  static RiskProfile lower_tail(double q) { return {Kind::kLowerTail, q}; }
  static RiskProfile mean() { return {Kind::kMean, 1.0}; }
  static RiskProfile upper_tail(double q) { return {Kind::kUpperTail, q}; }

  void validate() const;
  std::string describe() const;
};

// Per-action scalar values of a (actions x N) quantile table. Each row is
// sorted ascending before aggregation; network quantiles need not be monotone.
Eigen::VectorXd risk_value(Tensor2 const &table, QuantileSet const &quantiles, RiskProfile const &profile);

// Index of the largest entry; ties go to the smallest index.
std::size_t argmax_first(Eigen::VectorXd const &values);

} // namespace cbm::agent
