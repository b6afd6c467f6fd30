#include "cbm/agent/loss.hpp"

#include <cmath>

#include <fmt/format.h>

namespace cbm::agent {

double huber(double u, double kappa)
{
  double const a = std::abs(u);
  return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}

QuantileLoss quantile_huber_loss(std::span<double const> pred, std::span<double const> targets,
                                 QuantileSet const &quantiles, double kappa)
{
  if (!(kappa > 0.0)) {
    throw ConfigError("quantile_huber_loss: kappa must be > 0");
  }
  if (pred.size() != quantiles.size()) {
    throw ConfigError(fmt::format("quantile_huber_loss: {} predictions for {} quantiles", pred.size(),
                                  quantiles.size()));
  }
  if (targets.empty()) {
    throw ConfigError("quantile_huber_loss: empty target set");
  }
  QuantileLoss out;
  out.grad.assign(pred.size(), 0.0);
  double const inv = 1.0 / (static_cast<double>(targets.size()) * kappa);
  for (std::size_t j = 0; j < pred.size(); ++j) {
    double const tau = quantiles[j];
    double g = 0.0;
    for (double t : targets) {
      double const u = t - pred[j];
      double const w = u < 0.0 ? 1.0 - tau : tau;
      out.loss += w * huber(u, kappa);
      // d H(u)/du = u inside the quadratic zone, kappa * sign(u) outside; du/dpred = -1.
      double const dh = std::abs(u) <= kappa ? u : std::copysign(kappa, u);
      g -= w * dh;
    }
    out.grad[j] = g * inv;
  }
  out.loss *= inv;
  return out;
}

} // namespace cbm::agent
