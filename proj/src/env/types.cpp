#include "cbm/env/types.hpp"

#include <algorithm>
#include <cmath>

namespace cbm::env {

void EquipmentSpec::validate() const
{
  auto fail = [&](std::string const &what) { throw ConfigError("equipment '" + id + "': " + what); };
  if (!(base_fail_prob >= 0.0 && base_fail_prob <= 1.0)) {
    fail("base_fail_prob must lie in [0,1]");
  }
  if (!(aging_coeff >= 0.0)) {
    fail("aging_coeff must be >= 0");
  }
  if (!(install_age_years >= 0.0)) {
    fail("install_age_years must be >= 0");
  }
  if (!(repair_cost >= 0.0) || !(repair_cost < replace_cost)) {
    fail("requires 0 <= repair_cost < replace_cost");
  }
}

void CostHistory::push(double spend)
{
  if (window_.empty()) {
    return;
  }
  window_.pop_front();
  window_.push_back(spend);
}

void CostHistory::clear() { std::fill(window_.begin(), window_.end(), 0.0); }

double CostHistory::variance() const
{
  if (window_.empty()) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : window_) {
    mean += v;
  }
  mean /= static_cast<double>(window_.size());
  double ss = 0.0;
  for (double v : window_) {
    ss += (v - mean) * (v - mean);
  }
  return ss / static_cast<double>(window_.size());
}

std::size_t joint_action_count(std::size_t n_units)
{
  std::size_t count = 1;
  for (std::size_t i = 0; i < n_units; ++i) {
    count *= kActionsPerUnit;
  }
  return count;
}

JointAction JointAction::decode(std::size_t index, std::size_t n_units)
{
  if (index >= joint_action_count(n_units)) {
    throw std::out_of_range("JointAction::decode: index " + std::to_string(index) + " out of range");
  }
  std::vector<Action> per_unit(n_units);
  for (std::size_t i = 0; i < n_units; ++i) {
    per_unit[i] = static_cast<Action>(index % kActionsPerUnit);
    index /= kActionsPerUnit;
  }
  return JointAction(std::move(per_unit));
}

std::size_t JointAction::encode() const
{
  std::size_t index = 0;
  for (std::size_t i = per_unit_.size(); i-- > 0;) {
    index = index * kActionsPerUnit + static_cast<std::size_t>(per_unit_[i]);
  }
  return index;
}

std::size_t JointAction::maintenance_count() const
{
  std::size_t k = 0;
  for (auto a : per_unit_) {
    k += a != Action::kNothing ? 1 : 0;
  }
  return k;
}

void EnvConfig::validate() const
{
  if (n < 1) {
    throw ConfigError("n must be >= 1");
  }
  if (!(r_normal > 0.0 && r_anomalous < 0.0)) {
    throw ConfigError("requires r_normal > 0 > r_anomalous");
  }
  if (!(variance_threshold >= 0.0)) {
    throw ConfigError("variance_threshold must be >= 0");
  }
  if (!(sim_discount >= 0.0 && sim_discount < 1.0)) {
    throw ConfigError("sim_discount must lie in [0,1)");
  }
  if (!(cost_weight_lambda >= 0.0 && leveling_weight_alpha >= 0.0 && safety_weight >= 0.0 && action_weight >= 0.0)) {
    throw ConfigError("reward weights must be >= 0");
  }
  if (episode_length < 1) {
    throw ConfigError("episode_length must be >= 1");
  }
  if (!(lifecycle_horizon > 0.0)) {
    throw ConfigError("lifecycle_horizon must be > 0");
  }
  if (!(repair_success_prob >= 0.0 && repair_success_prob <= 1.0)) {
    throw ConfigError("repair_success_prob must lie in [0,1]");
  }
}

std::vector<EquipmentSpec> testbed_equipment()
{
  return {
      {"CP-1", 19.7, 0.018, 1.0, 12.0, 40.0, 0.06},
      {"CDP-0", 3.0, 0.005, 0.8, 10.0, 35.0, 0.04},
      {"CP-2", 0.5, 0.003, 0.6, 8.0, 30.0, 0.03},
  };
}

} // namespace cbm::env
