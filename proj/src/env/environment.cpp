#include "cbm/env/environment.hpp"

#include <algorithm>

namespace cbm::env {

namespace {

constexpr double kYearsPerStep = 1.0 / 12.0;

} // namespace

Environment::Environment(EnvConfig config, std::vector<EquipmentSpec> specs)
    : config_(std::move(config)), specs_(std::move(specs)), history_(config_.h), rng_(config_.seed)
{
  config_.validate();
  if (specs_.size() != config_.n) {
    throw ConfigError("environment: " + std::to_string(specs_.size()) + " equipment specs for n = " +
                      std::to_string(config_.n));
  }
  double max_replace = 0.0;
  for (auto const &s : specs_) {
    s.validate();
    max_replace = std::max(max_replace, s.replace_cost);
  }
  cost_scale_ = max_replace > 0.0 ? max_replace : 1.0;
  states_.resize(config_.n);
}

StateVector Environment::reset(std::uint64_t seed)
{
  rng_.seed(seed);
  return reset();
}

StateVector Environment::reset()
{
  for (std::size_t i = 0; i < config_.n; ++i) {
    auto &u = states_[i];
    u.condition = Condition::kNormal;
    u.age_years = specs_[i].install_age_years;
    u.age_norm = std::min(u.age_years / config_.lifecycle_horizon, 1.0);
    u.temp_norm = sample_temperature(Condition::kNormal, rng_);
  }
  history_.clear();
  steps_ = 0;
  done_ = false;
  return observe();
}

StateVector Environment::observe() const { return encode_state(states_, history_, cost_scale_); }

void Environment::set_unit_states(std::vector<EquipmentState> states)
{
  if (states.size() != config_.n) {
    throw ConfigError("set_unit_states: expected " + std::to_string(config_.n) + " units");
  }
  states_ = std::move(states);
}

StepResult Environment::step(JointAction const &action)
{
  if (done_) {
    throw EpisodeError("step called on a finished episode; call reset first");
  }
  if (action.size() != config_.n) {
    throw ConfigError("step: joint action has " + std::to_string(action.size()) + " entries for " +
                      std::to_string(config_.n) + " units");
  }

  StepInfo info;
  info.step_index = steps_;
  info.units.resize(config_.n);
  std::vector<Condition> before(config_.n);
  std::vector<Condition> after(config_.n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t i = 0; i < config_.n; ++i) {
    auto &out = info.units[i];
    before[i] = states_[i].condition;
    out.before = before[i];
    out.action = action[i];
    out.anomaly_prob = transition_prob(specs_[i], states_[i], action[i], config_.repair_success_prob);
    after[i] = unit(rng_) < out.anomaly_prob ? Condition::kAnomalous : Condition::kNormal;
    out.after = after[i];
    out.spend = specs_[i].action_cost(action[i]);
    info.spend += out.spend;
  }

  for (std::size_t i = 0; i < config_.n; ++i) {
    auto &u = states_[i];
    u.age_years = action[i] == Action::kReplace ? 0.0 : u.age_years + kYearsPerStep;
    u.age_norm = std::min(u.age_years / config_.lifecycle_horizon, 1.0);
    u.condition = after[i];
    u.temp_norm = sample_temperature(after[i], rng_);
  }
  history_.push(info.spend);

  info.reward = RewardBreakdown::from_parts(reward_risk(after, config_), reward_cost(action, specs_, config_),
                                            reward_leveling(history_, config_), reward_safety(after, config_),
                                            reward_action(before, action, config_));
  ++steps_;
  done_ = steps_ >= config_.episode_length;

  StepResult result;
  result.state = observe();
  result.reward = info.reward;
  result.done = done_;
  result.info = std::move(info);
  return result;
}

} // namespace cbm::env
