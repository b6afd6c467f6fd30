#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbm/agent/quantiles.hpp"
#include "cbm/env/types.hpp"

namespace cbm::trainer {

struct EarlyStop
{
  std::size_t window = 200;
  double min_improvement = 0.01; // relative improvement of the moving mean between windows
};

struct UnknownStrategy : ConfigError
{
  using ConfigError::ConfigError;
};

struct StrategyConfig
{
  std::string name;
  agent::RiskProfile risk_profile;
  double lambda_multiplier = 1.0;
  double safety_multiplier = 1.0;
  std::size_t episode_budget = 3000;
  std::optional<EarlyStop> early_stop;

  // Environment config with this strategy's reward-weight overrides applied.
  env::EnvConfig apply(env::EnvConfig base) const;
};

inline constexpr std::string_view kSafetyFirst = "safety-first";
inline constexpr std::string_view kBalanced = "balanced";
inline constexpr std::string_view kCostEfficient = "cost-efficient";

std::vector<std::string> strategy_names();

// safety-first: lower-tail mean (q <= 0.25), lambda x0.5, safety weight x1.5
// balanced:     full mean, base weights
// cost-efficient: upper-tail mean (q >= 0.75), lambda x2.0, safety weight x0.5
StrategyConfig make_strategy(std::string_view name, std::size_t episode_budget = 3000,
                             std::optional<EarlyStop> early_stop = EarlyStop{});

} // namespace cbm::trainer
