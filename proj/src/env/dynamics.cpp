#include "cbm/env/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace cbm::env {

double aging_multiplier(double age_years)
{
  if (!(age_years >= 0.0)) {
    throw DomainError("aging_multiplier: age must be >= 0");
  }
  if (age_years <= 2.0) {
    return 1.05;
  }
  if (age_years <= 10.0) {
    return 1.00;
  }
  if (age_years <= 20.0) {
    return 0.95;
  }
  return 0.85;
}

double transition_prob(EquipmentSpec const &spec, EquipmentState const &state, Action action,
                       double repair_success_prob)
{
  if (action == Action::kReplace) {
    return 0.0;
  }
  if (state.condition == Condition::kAnomalous) {
    return action == Action::kRepair ? 1.0 - repair_success_prob : 1.0;
  }
  double const p = spec.base_fail_prob * (1.0 + spec.aging_coeff * state.age_years) / aging_multiplier(state.age_years);
  return std::clamp(p, 0.0, 1.0);
}

double sample_temperature(Condition c, Rng &rng)
{
  std::normal_distribution<double> temp =
      c == Condition::kNormal ? std::normal_distribution<double>(0.40, 0.05) : std::normal_distribution<double>(0.70, 0.08);
  return std::clamp(temp(rng), 0.0, 1.0);
}

StateVector encode_state(std::vector<EquipmentState> const &units, CostHistory const &hist, double cost_scale)
{
  StateVector s(static_cast<Eigen::Index>(3 * units.size() + hist.length()));
  Eigen::Index k = 0;
  for (auto const &u : units) {
    s(k++) = u.condition == Condition::kAnomalous ? 1.0 : 0.0;
    s(k++) = u.temp_norm;
    s(k++) = u.age_norm;
  }
  double const inv = cost_scale > 0.0 ? 1.0 / cost_scale : 1.0;
  for (double v : hist.values()) {
    s(k++) = v * inv;
  }
  return s;
}

} // namespace cbm::env
