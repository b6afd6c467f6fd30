#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbm/agent/loss.hpp"
#include "cbm/agent/network.hpp"
#include "cbm/agent/quantiles.hpp"
#include "cbm/numerics/adam.hpp"
#include "cbm/replay/prioritized_buffer.hpp"

namespace cbm::agent {

struct AgentConfig
{
  NetworkConfig net;
  numerics::AdamConfig adam;
  replay::ReplayConfig replay;
  double gamma = 0.95;
  double kappa = 1.0;
  std::size_t batch_size = 128;
  std::size_t warmup = 5000;
  std::size_t target_sync_interval = 500;
  bool double_dqn = true;
  double epsilon = 0.0;       // optional epsilon-greedy fallback; noisy layers explore by default
  double grad_clip = 10.0;    // global L2 norm, <= 0 disables
  double reward_scale = 0.01; // rewards are multiplied by this before they enter the replay buffer
  double beta_start = 0.4;
  double beta_end = 1.0;

  void validate() const;
};

struct TrainStats
{
  double loss = 0.0;
  std::vector<double> td_errors;
  double grad_norm = 0.0;
  bool synced = false;
};

// Per-sample target quantile rows: r + gamma (1 - done) Z_target(s', a*), where
// a* maximises the mean of the online network's quantiles (or the target's when
// double_dqn is off). Both networks run noise-free.
Tensor2 td_target(std::vector<replay::TransitionRecord> const &batch, QuantileNetwork &online,
                  QuantileNetwork &target, double gamma, bool double_dqn);

class QrDqnAgent
{
public:
  QrDqnAgent(AgentConfig cfg, std::uint64_t seed);

  std::size_t select_action(env::StateVector const &state, RiskProfile const &profile, Mode mode);

  // Stores the transition with its reward multiplied by reward_scale.
  void remember(replay::TransitionRecord record);
  bool ready_to_train() const;

  TrainStats train_step(double beta);
  void sync_target();

  QuantileNetwork &online() { return online_; }
  QuantileNetwork &target() { return target_; }
  replay::PrioritizedReplay &buffer() { return buffer_; }
  QuantileSet const &quantiles() const { return quantiles_; }
  AgentConfig const &config() const { return cfg_; }
  long train_steps() const { return train_steps_; }

private:
  AgentConfig cfg_;
  QuantileSet quantiles_;
  Rng rng_;
  QuantileNetwork online_;
  QuantileNetwork target_;
  replay::PrioritizedReplay buffer_;
  long train_steps_ = 0;
};

} // namespace cbm::agent
