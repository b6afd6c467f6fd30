#pragma once

#include <span>

#include "cbm/env/types.hpp"

namespace cbm::env {

double reward_risk(std::span<Condition const> conditions, EnvConfig const &cfg);

// Non-positive; the simultaneous-maintenance discount applies when two or more units act.
double reward_cost(JointAction const &action, std::span<EquipmentSpec const> specs, EnvConfig const &cfg);

double reward_leveling(CostHistory const &hist, EnvConfig const &cfg);

double reward_safety(std::span<Condition const> conditions, EnvConfig const &cfg);

// Bonus for repairing/replacing anomalous units and leaving normal ones alone,
// judged on the conditions the agent observed before acting.
double reward_action(std::span<Condition const> conditions_before, JointAction const &action, EnvConfig const &cfg);

} // namespace cbm::env
