#include "cbm/agent/agent.hpp"

#include <cmath>

#include <fmt/format.h>

namespace cbm::agent {

using numerics::Index;

void AgentConfig::validate() const
{
  net.validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("agent: gamma must lie in [0,1]");
  }
  if (!(kappa > 0.0)) {
    throw ConfigError("agent: kappa must be > 0");
  }
  if (batch_size == 0) {
    throw ConfigError("agent: batch_size must be > 0");
  }
  if (replay.capacity < batch_size) {
    throw ConfigError("agent: replay capacity smaller than batch size");
  }
  if (target_sync_interval == 0) {
    throw ConfigError("agent: target_sync_interval must be > 0");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("agent: epsilon must lie in [0,1]");
  }
  if (!(adam.lr > 0.0)) {
    throw ConfigError("agent: learning rate must be > 0");
  }
  if (!(reward_scale > 0.0)) {
    throw ConfigError("agent: reward_scale must be > 0");
  }
}

Tensor2 td_target(std::vector<replay::TransitionRecord> const &batch, QuantileNetwork &online,
                  QuantileNetwork &target, double gamma, bool double_dqn)
{
  auto const &cfg = target.config();
  auto const n = static_cast<Index>(cfg.n_quantiles);
  auto const actions = static_cast<Index>(cfg.action_count);
  if (online.config().n_quantiles != cfg.n_quantiles || online.config().action_count != cfg.action_count ||
      online.config().state_dim != cfg.state_dim) {
    throw ConfigError("td_target: online and target networks differ in shape");
  }
  Tensor2 targets(static_cast<Index>(batch.size()), n);
  if (batch.empty()) {
    return targets;
  }

  std::vector<Eigen::VectorXd const *> next;
  next.reserve(batch.size());
  for (auto const &r : batch) {
    next.push_back(&r.next_state);
  }
  Tensor2 const next_states = to_batch(next);
  Tensor2 const target_q = target.forward_eval(next_states).quantiles;
  Tensor2 const select_q = double_dqn ? online.forward_eval(next_states).quantiles : target_q;

  for (Index b = 0; b < targets.rows(); ++b) {
    auto const &rec = batch[static_cast<std::size_t>(b)];
    Index best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (Index a = 0; a < actions; ++a) {
      double const m = select_q.block(b, a * n, 1, n).mean();
      if (m > best_mean) {
        best_mean = m;
        best = a;
      }
    }
    double const bootstrap = rec.done ? 0.0 : gamma;
    targets.row(b) = (bootstrap * target_q.block(b, best * n, 1, n)).array() + rec.reward;
  }
  return targets;
}

QrDqnAgent::QrDqnAgent(AgentConfig cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), std::move(cfg))),
      quantiles_(cfg_.net.n_quantiles),
      rng_(seed),
      online_(cfg_.net, rng_),
      target_(cfg_.net, rng_),
      buffer_(cfg_.replay)
{
  target_.copy_parameters_from(online_);
}

std::size_t QrDqnAgent::select_action(env::StateVector const &state, RiskProfile const &profile, Mode mode)
{
  if (mode == Mode::kTrain && cfg_.epsilon > 0.0) {
    std::bernoulli_distribution explore(cfg_.epsilon);
    if (explore(rng_)) {
      std::uniform_int_distribution<std::size_t> pick(0, cfg_.net.action_count - 1);
      return pick(rng_);
    }
  }
  Tensor2 const table = online_.table(state, mode, rng_);
  return argmax_first(risk_value(table, quantiles_, profile));
}

void QrDqnAgent::remember(replay::TransitionRecord record)
{
  if (static_cast<std::size_t>(record.state.size()) != cfg_.net.state_dim ||
      record.next_state.size() != record.state.size()) {
    throw ConfigError(fmt::format("remember: state length {} / {} for state_dim {}", record.state.size(),
                                  record.next_state.size(), cfg_.net.state_dim));
  }
  if (record.action_index >= cfg_.net.action_count) {
    throw ConfigError(fmt::format("remember: action index {} out of range", record.action_index));
  }
  record.reward *= cfg_.reward_scale;
  buffer_.push(std::move(record));
}

bool QrDqnAgent::ready_to_train() const
{
  return buffer_.size() >= std::max(cfg_.warmup, cfg_.batch_size);
}

TrainStats QrDqnAgent::train_step(double beta)
{
  auto const batch = buffer_.sample(cfg_.batch_size, beta, rng_);
  Tensor2 const targets = td_target(batch.records, online_, target_, cfg_.gamma, cfg_.double_dqn);

  std::vector<Eigen::VectorXd const *> states;
  states.reserve(batch.records.size());
  for (auto const &r : batch.records) {
    states.push_back(&r.state);
  }
  NetworkTape tape;
  NetworkOutput const out = online_.forward(to_batch(states), Mode::kTrain, rng_, &tape);

  auto const n = static_cast<Index>(cfg_.net.n_quantiles);
  auto const rows = static_cast<Index>(batch.records.size());
  Tensor2 grad = Tensor2::Zero(rows, out.quantiles.cols());
  TrainStats stats;
  stats.td_errors.resize(batch.records.size());
  std::vector<double> pred(static_cast<std::size_t>(n));
  std::vector<double> tgt(static_cast<std::size_t>(n));
  for (Index b = 0; b < rows; ++b) {
    auto const k = static_cast<std::size_t>(b);
    auto const a = static_cast<Index>(batch.records[k].action_index);
    for (Index j = 0; j < n; ++j) {
      pred[static_cast<std::size_t>(j)] = out.quantiles(b, a * n + j);
      tgt[static_cast<std::size_t>(j)] = targets(b, j);
    }
    auto const ql = quantile_huber_loss(pred, tgt, quantiles_, cfg_.kappa);
    double const w = batch.weights[k] / static_cast<double>(rows);
    stats.loss += w * ql.loss;
    for (Index j = 0; j < n; ++j) {
      grad(b, a * n + j) = w * ql.grad[static_cast<std::size_t>(j)];
    }
    stats.td_errors[k] = std::abs(targets.row(b).mean() - out.quantiles.block(b, a * n, 1, n).mean());
  }
  if (!std::isfinite(stats.loss)) {
    throw numerics::TrainingError(fmt::format("non-finite loss at train step {}", train_steps_ + 1));
  }

  online_.backward(grad, tape);
  auto params = online_.parameters();
  stats.grad_norm = numerics::clip_grad_norm<double>(params, cfg_.grad_clip);
  numerics::adam_step<double>(params, cfg_.adam, train_steps_ + 1);
  ++train_steps_;

  buffer_.update_priorities(batch.handles, stats.td_errors);
  if (train_steps_ % static_cast<long>(cfg_.target_sync_interval) == 0) {
    sync_target();
    stats.synced = true;
  }
  return stats;
}

void QrDqnAgent::sync_target() { target_.copy_parameters_from(online_); }

} // namespace cbm::agent
