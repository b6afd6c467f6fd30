#pragma once

#include <span>
#include <vector>

#include "cbm/agent/quantiles.hpp"

namespace cbm::agent {

struct QuantileLoss
{
  double loss = 0.0;
  std::vector<double> grad; // d loss / d pred_j
};

// Asymmetric Huber loss for regressing the quantiles `pred` (one per midpoint)
// onto the empirical target distribution `targets`:
//   L = (1/N') sum_j sum_k |tau_j - 1{u_jk < 0}| * H_kappa(u_jk) / kappa,  u_jk = target_k - pred_j.
QuantileLoss quantile_huber_loss(std::span<double const> pred, std::span<double const> targets,
                                 QuantileSet const &quantiles, double kappa);

double huber(double u, double kappa);

} // namespace cbm::agent
