#include "cbm/trainer/strategy.hpp"

namespace cbm::trainer {

env::EnvConfig StrategyConfig::apply(env::EnvConfig base) const
{
  base.cost_weight_lambda *= lambda_multiplier;
  base.safety_weight *= safety_multiplier;
  return base;
}

std::vector<std::string> strategy_names()
{
  return {std::string(kSafetyFirst), std::string(kBalanced), std::string(kCostEfficient)};
}

StrategyConfig make_strategy(std::string_view name, std::size_t episode_budget, std::optional<EarlyStop> early_stop)
{
  StrategyConfig s;
  s.name = std::string(name);
  s.episode_budget = episode_budget;
  s.early_stop = early_stop;
  if (name == kSafetyFirst) {
    s.risk_profile = agent::RiskProfile::lower_tail(0.25);
    s.lambda_multiplier = 0.5;
    s.safety_multiplier = 1.5;
  } else if (name == kBalanced) {
    s.risk_profile = agent::RiskProfile::mean();
  } else if (name == kCostEfficient) {
    s.risk_profile = agent::RiskProfile::upper_tail(0.75);
    s.lambda_multiplier = 2.0;
    s.safety_multiplier = 0.5;
  } else {
    std::string valid;
    for (auto const &n : strategy_names()) {
      valid += (valid.empty() ? "" : ", ") + n;
    }
    throw UnknownStrategy("unknown strategy '" + std::string(name) + "' (valid: " + valid + ")");
  }
  return s;
}

} // namespace cbm::trainer
