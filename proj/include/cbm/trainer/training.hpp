#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cbm/agent/agent.hpp"
#include "cbm/env/environment.hpp"
#include "cbm/trainer/metrics.hpp"
#include "cbm/trainer/strategy.hpp"

namespace cbm::trainer {

struct TrainingSetup
{
  StrategyConfig strategy;
  env::EnvConfig env;
  std::vector<env::EquipmentSpec> equipment;
  agent::AgentConfig agent;
  std::uint64_t seed = 0;
  std::size_t eval_tail = 100;
};

struct TrainingResult
{
  RunSummary summary;
  std::vector<EpisodeMetrics> metrics;
  std::shared_ptr<agent::QrDqnAgent> agent;
  bool aborted = false;
  bool early_stopped = false;
  std::string error;
};

// Independent, reproducible sub-streams of one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Fills the state and action dimensions of the network from the environment.
agent::AgentConfig configure_agent(agent::AgentConfig base, env::EnvConfig const &env);

using Policy = std::function<std::size_t(env::StateVector const &)>;

// Plays one episode from reset() and accumulates its metrics. `on_step` sees
// every transition before the next action is chosen.
EpisodeMetrics run_episode(env::Environment &environment, Policy const &policy, std::size_t episode_index,
                           std::function<void(env::StateVector const &, std::size_t, env::StepResult const &)> const
                               &on_step = {});

// reset -> act -> step -> remember -> train (after warm-up) -> sync, per episode.
// A non-finite training state stops the run; metrics collected so far are kept.
TrainingResult run_training(TrainingSetup const &setup,
                            std::function<void(EpisodeMetrics const &)> const &on_episode = {});

// Noise-free greedy rollouts; the agent is not updated.
std::vector<EpisodeMetrics> evaluate_policy(agent::QrDqnAgent &agent, agent::RiskProfile const &profile,
                                            env::EnvConfig const &env, std::vector<env::EquipmentSpec> const &equipment,
                                            std::size_t episodes, std::uint64_t seed);

// Uniformly random joint actions.
std::vector<EpisodeMetrics> random_policy(env::EnvConfig const &env, std::vector<env::EquipmentSpec> const &equipment,
                                          std::size_t episodes, std::uint64_t seed);

} // namespace cbm::trainer
