#include "cbm/trainer/training.hpp"

#include <algorithm>

namespace cbm::trainer {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  // splitmix64 finaliser over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

agent::AgentConfig configure_agent(agent::AgentConfig base, env::EnvConfig const &env)
{
  base.net.state_dim = 3 * env.n + env.h;
  base.net.action_count = env::joint_action_count(env.n);
  return base;
}

EpisodeMetrics run_episode(env::Environment &environment, Policy const &policy, std::size_t episode_index,
                           std::function<void(env::StateVector const &, std::size_t, env::StepResult const &)> const
                               &on_step)
{
  EpisodeMetrics m;
  m.episode = episode_index;
  env::StateVector state = environment.reset();
  bool done = false;
  while (!done) {
    std::size_t const action = policy(state);
    auto result = environment.step(env::JointAction::decode(action, environment.units()));
    m.total_reward += result.reward.total;
    m.total_cost += result.info.spend;
    m.reward_components += result.reward;
    for (auto const &u : result.info.units) {
      if (u.after == env::Condition::kAnomalous) {
        ++m.anomalous_steps;
      }
      bool const maintains = u.action != env::Action::kNothing;
      if (maintains) {
        ++m.maintenance_actions;
      }
      if (u.before == env::Condition::kAnomalous) {
        ++m.anomalous_decisions;
        if (maintains) {
          ++m.anomalous_maintenance;
        }
      }
    }
    if (on_step) {
      on_step(state, action, result);
    }
    done = result.done;
    state = std::move(result.state);
  }
  return m;
}

TrainingResult run_training(TrainingSetup const &setup, std::function<void(EpisodeMetrics const &)> const &on_episode)
{
  TrainingResult out;
  env::EnvConfig env_cfg = setup.strategy.apply(setup.env);
  env_cfg.seed = derive_seed(setup.seed, 0);
  env::Environment environment(env_cfg, setup.equipment);
  out.agent = std::make_shared<agent::QrDqnAgent>(configure_agent(setup.agent, env_cfg), derive_seed(setup.seed, 1));
  auto &learner = *out.agent;
  auto const &profile = setup.strategy.risk_profile;
  profile.validate();

  std::size_t const budget = setup.strategy.episode_budget;
  double const beta0 = setup.agent.beta_start;
  double const beta1 = setup.agent.beta_end;
  try {
    for (std::size_t ep = 0; ep < budget; ++ep) {
      double const progress = budget > 1 ? static_cast<double>(ep) / static_cast<double>(budget - 1) : 1.0;
      double const beta = beta0 + (beta1 - beta0) * progress;
      auto policy = [&](env::StateVector const &s) { return learner.select_action(s, profile, numerics::Mode::kTrain); };
      auto on_step = [&](env::StateVector const &s, std::size_t a, env::StepResult const &r) {
        // Episodes end on a time limit, not in an absorbing state, so the
        // bootstrap is kept across the boundary.
        learner.remember({s, a, r.reward.total, r.state, false});
        if (learner.ready_to_train()) {
          learner.train_step(beta);
        }
      };
      out.metrics.push_back(run_episode(environment, policy, ep, on_step));
      if (on_episode) {
        on_episode(out.metrics.back());
      }
      if (setup.strategy.early_stop &&
          early_stop_check(out.metrics, *setup.strategy.early_stop) == StopDecision::kStop) {
        out.early_stopped = true;
        break;
      }
    }
  } catch (numerics::TrainingError const &e) {
    out.aborted = true;
    out.error = e.what();
  }
  out.summary = summarize(out.metrics, setup.eval_tail);
  return out;
}

std::vector<EpisodeMetrics> evaluate_policy(agent::QrDqnAgent &agent, agent::RiskProfile const &profile,
                                            env::EnvConfig const &env, std::vector<env::EquipmentSpec> const &equipment,
                                            std::size_t episodes, std::uint64_t seed)
{
  env::EnvConfig cfg = env;
  cfg.seed = derive_seed(seed, 2);
  env::Environment environment(cfg, equipment);
  auto policy = [&](env::StateVector const &s) { return agent.select_action(s, profile, numerics::Mode::kEval); };
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    out.push_back(run_episode(environment, policy, ep));
  }
  return out;
}

std::vector<EpisodeMetrics> random_policy(env::EnvConfig const &env, std::vector<env::EquipmentSpec> const &equipment,
                                          std::size_t episodes, std::uint64_t seed)
{
  env::EnvConfig cfg = env;
  cfg.seed = derive_seed(seed, 2);
  env::Environment environment(cfg, equipment);
  Rng rng(derive_seed(seed, 3));
  std::uniform_int_distribution<std::size_t> pick(0, environment.action_count() - 1);
  auto policy = [&](env::StateVector const &) { return pick(rng); };
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    out.push_back(run_episode(environment, policy, ep));
  }
  return out;
}

} // namespace cbm::trainer
