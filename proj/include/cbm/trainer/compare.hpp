#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbm/trainer/training.hpp"

namespace cbm::trainer {

struct ScenarioOutcome
{
  StrategyConfig strategy;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainingResult result;
};

struct ComparisonReport
{
  std::vector<ScenarioOutcome> runs;
  // 1-based ranks, one entry per run, in run order. Failed runs rank last.
  std::vector<std::size_t> roi_rank;
  std::vector<std::size_t> stability_rank;
  std::vector<std::size_t> reward_rank;
  std::string recommended; // ROI-maximal successful strategy, empty if none

  bool all_ok() const;
  std::string to_text() const;
  nlohmann::ordered_json to_json() const;
};

// Trains every strategy on its own copy of the environment with seed base_seed + index.
// Runs share nothing mutable; `parallel` runs them on separate threads.
ComparisonReport compare_scenarios(std::vector<StrategyConfig> const &strategies, env::EnvConfig const &env,
                                   std::vector<env::EquipmentSpec> const &equipment, agent::AgentConfig const &agent,
                                   std::uint64_t base_seed, bool parallel = true, std::size_t eval_tail = 100);

} // namespace cbm::trainer
