#include "cbm/agent/quantiles.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace cbm::agent {

QuantileSet::QuantileSet(std::size_t n)
{
  if (n == 0) {
    throw ConfigError("QuantileSet: need at least one quantile");
  }
  midpoints_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    midpoints_[i] = static_cast<double>(2 * i + 1) / static_cast<double>(2 * n);
  }
}

void RiskProfile::validate() const
{
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw ConfigError(fmt::format("risk profile cutoff {} outside (0,1]", cutoff));
  }
}

std::string RiskProfile::describe() const
{
  switch (kind) {
  case Kind::kLowerTail:
    return fmt::format("lower-tail(q<={})", cutoff);
  case Kind::kUpperTail:
    return fmt::format("upper-tail(q>={})", cutoff);
  case Kind::kMean:
    break;
  }
  return "mean";
}

Eigen::VectorXd risk_value(Tensor2 const &table, QuantileSet const &quantiles, RiskProfile const &profile)
{
  auto const n = static_cast<Eigen::Index>(quantiles.size());
  if (table.cols() != n) {
    throw ConfigError(fmt::format("risk_value: table has {} quantile columns, expected {}", table.cols(), n));
  }
  profile.validate();

  // Contiguous index range [lo, hi) of selected sorted positions.
  Eigen::Index lo = 0;
  Eigen::Index hi = n;
  if (profile.kind == RiskProfile::Kind::kLowerTail) {
    hi = 0;
    while (hi < n && quantiles[static_cast<std::size_t>(hi)] <= profile.cutoff) {
      ++hi;
    }
  } else if (profile.kind == RiskProfile::Kind::kUpperTail) {
    lo = n;
    while (lo > 0 && quantiles[static_cast<std::size_t>(lo - 1)] >= profile.cutoff) {
      --lo;
    }
  }
  if (hi <= lo) {
    throw ConfigError("risk_value: " + profile.describe() + " selects no quantile midpoint");
  }

  Eigen::VectorXd values(table.rows());
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < table.rows(); ++a) {
    for (Eigen::Index j = 0; j < n; ++j) {
      row[static_cast<std::size_t>(j)] = table(a, j);
    }
    std::sort(row.begin(), row.end());
    double sum = 0.0;
    for (Eigen::Index j = lo; j < hi; ++j) {
      sum += row[static_cast<std::size_t>(j)];
    }
    values(a) = sum / static_cast<double>(hi - lo);
  }
  return values;
}

std::size_t argmax_first(Eigen::VectorXd const &values)
{
  if (values.size() == 0) {
    throw ConfigError("argmax over an empty value vector");
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) {
      best = i;
    }
  }
  return static_cast<std::size_t>(best);
}

} // namespace cbm::agent
