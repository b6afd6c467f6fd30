#pragma once

#include <optional>

#include "cbm/env/dynamics.hpp"
#include "cbm/env/reward.hpp"
#include "cbm/env/types.hpp"

namespace cbm::env {

struct UnitOutcome
{
  Condition before = Condition::kNormal;
  Condition after = Condition::kNormal;
  Action action = Action::kNothing;
  double anomaly_prob = 0.0;
  double spend = 0.0;
};

struct StepInfo
{
  RewardBreakdown reward;
  std::vector<UnitOutcome> units;
  double spend = 0.0;
  std::size_t step_index = 0;
};

struct StepResult
{
  StateVector state;
  RewardBreakdown reward;
  bool done = false;
  StepInfo info;
};

// Multi-unit condition-based maintenance simulator with monthly steps.
// Owns its random stream; copies continue independently from the same point.
class Environment
{
public:
  Environment(EnvConfig config, std::vector<EquipmentSpec> specs);

  // Starts a new episode, continuing the current random stream.
  StateVector reset();
  // Re-seeds the stream, then starts a new episode.
  StateVector reset(std::uint64_t seed);

  StepResult step(JointAction const &action);

  StateVector observe() const;

  std::size_t state_dim() const { return 3 * config_.n + config_.h; }
  std::size_t action_count() const { return joint_action_count(config_.n); }
  std::size_t units() const { return config_.n; }
  bool done() const { return done_; }
  std::size_t steps_taken() const { return steps_; }

  EnvConfig const &config() const { return config_; }
  std::vector<EquipmentSpec> const &specs() const { return specs_; }
  std::vector<EquipmentState> const &unit_states() const { return states_; }
  CostHistory const &history() const { return history_; }
  double cost_scale() const { return cost_scale_; }

  // Test hook: place the units in a chosen configuration mid-episode.
  void set_unit_states(std::vector<EquipmentState> states);

private:
  EnvConfig config_;
  std::vector<EquipmentSpec> specs_;
  std::vector<EquipmentState> states_;
  CostHistory history_;
  Rng rng_;
  double cost_scale_ = 1.0;
  std::size_t steps_ = 0;
  bool done_ = true;
};

} // namespace cbm::env
