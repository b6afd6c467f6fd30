#include "cbm/env/reward.hpp"

#include <algorithm>

namespace cbm::env {

double reward_risk(std::span<Condition const> conditions, EnvConfig const &cfg)
{
  double r = 0.0;
  for (auto c : conditions) {
    r += c == Condition::kNormal ? cfg.r_normal : cfg.r_anomalous;
  }
  return r;
}

double reward_cost(JointAction const &action, std::span<EquipmentSpec const> specs, EnvConfig const &cfg)
{
  if (action.size() != specs.size()) {
    throw ConfigError("reward_cost: action length does not match unit count");
  }
  double spend = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    spend += specs[i].action_cost(action[i]);
  }
  double const factor = action.maintenance_count() >= 2 ? 1.0 - cfg.sim_discount : 1.0;
  return -cfg.cost_weight_lambda * spend * factor;
}

double reward_leveling(CostHistory const &hist, EnvConfig const &cfg)
{
  return -cfg.leveling_weight_alpha * std::max(0.0, hist.variance() - cfg.variance_threshold);
}

double reward_safety(std::span<Condition const> conditions, EnvConfig const &cfg)
{
  if (conditions.empty()) {
    return 0.0;
  }
  auto const normal = std::count(conditions.begin(), conditions.end(), Condition::kNormal);
  return cfg.safety_weight * (static_cast<double>(normal) / static_cast<double>(conditions.size()));
}

double reward_action(std::span<Condition const> conditions_before, JointAction const &action, EnvConfig const &cfg)
{
  if (action.size() != conditions_before.size()) {
    throw ConfigError("reward_action: action length does not match unit count");
  }
  double r = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    bool const maintains = action[i] != Action::kNothing;
    bool const anomalous = conditions_before[i] == Condition::kAnomalous;
    if (anomalous == maintains) {
      r += cfg.action_weight;
    }
  }
  return r;
}

} // namespace cbm::env
