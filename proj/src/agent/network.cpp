#include "cbm/agent/network.hpp"

#include <fmt/format.h>

namespace cbm::agent {

using numerics::Activation;
using numerics::Index;

void NetworkConfig::validate() const
{
  if (state_dim == 0 || action_count == 0 || n_quantiles == 0) {
    throw ConfigError(fmt::format("network: state_dim={}, action_count={}, n_quantiles={} must all be > 0",
                                  state_dim, action_count, n_quantiles));
  }
  if (trunk_widths.empty()) {
    throw ConfigError("network: trunk needs at least one layer");
  }
  for (auto w : trunk_widths) {
    if (w == 0) {
      throw ConfigError("network: zero trunk width");
    }
  }
  for (auto w : head_widths) {
    if (w == 0) {
      throw ConfigError("network: zero head width");
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("network: dropout must lie in [0,1)");
  }
  if (!(sigma_init >= 0.0)) {
    throw ConfigError("network: sigma_init must be >= 0");
  }
}

QuantileNetwork::QuantileNetwork(NetworkConfig cfg, Rng &init_rng) : cfg_(std::move(cfg))
{
  cfg_.validate();
  auto in = static_cast<Index>(cfg_.state_dim);
  for (auto w : cfg_.trunk_widths) {
    trunk_.add_linear(in, static_cast<Index>(w), Activation::kRelu, init_rng, cfg_.dropout);
    in = static_cast<Index>(w);
  }
  auto build_head = [&](numerics::Chain<double> &head, Index out) {
    Index h_in = in;
    for (auto w : cfg_.head_widths) {
      head.add_linear(h_in, static_cast<Index>(w), Activation::kRelu, init_rng);
      h_in = static_cast<Index>(w);
    }
    if (cfg_.noisy) {
      head.add_noisy(h_in, out, Activation::kNone, cfg_.sigma_init, init_rng);
    } else {
      head.add_linear(h_in, out, Activation::kNone, init_rng);
    }
  };
  build_head(value_, static_cast<Index>(cfg_.n_quantiles));
  build_head(advantage_, static_cast<Index>(cfg_.action_count * cfg_.n_quantiles));
}

NetworkOutput QuantileNetwork::run(Tensor2 const &states, Mode mode, Rng *rng, NetworkTape &tape)
{
  if (states.cols() != static_cast<Index>(cfg_.state_dim)) {
    throw ConfigError(fmt::format("network: state width {} does not match configured {}", states.cols(),
                                  cfg_.state_dim));
  }
  if (mode == Mode::kTrain) {
    value_.resample_noise(*rng);
    advantage_.resample_noise(*rng);
  } else {
    value_.zero_noise();
    advantage_.zero_noise();
  }
  Tensor2 const features = trunk_.forward(states, mode, rng, tape.trunk);

  NetworkOutput out;
  out.value = value_.forward(features, mode, rng, tape.value);
  out.advantage = advantage_.forward(features, mode, rng, tape.advantage);

  auto const n = static_cast<Index>(cfg_.n_quantiles);
  auto const actions = static_cast<Index>(cfg_.action_count);
  out.quantiles.resize(states.rows(), actions * n);
  for (Index b = 0; b < states.rows(); ++b) {
    numerics::RowVector<double> mean_adv = numerics::RowVector<double>::Zero(n);
    for (Index a = 0; a < actions; ++a) {
      mean_adv += out.advantage.block(b, a * n, 1, n);
    }
    mean_adv /= static_cast<double>(actions);
    for (Index a = 0; a < actions; ++a) {
      out.quantiles.block(b, a * n, 1, n) = out.value.row(b) + out.advantage.block(b, a * n, 1, n) - mean_adv;
    }
  }
  return out;
}

NetworkOutput QuantileNetwork::forward(Tensor2 const &states, Mode mode, Rng &rng, NetworkTape *tape)
{
  NetworkTape scratch;
  return run(states, mode, &rng, tape != nullptr ? *tape : scratch);
}

NetworkOutput QuantileNetwork::forward_eval(Tensor2 const &states)
{
  NetworkTape scratch;
  return run(states, Mode::kEval, nullptr, scratch);
}

Tensor2 QuantileNetwork::table(Eigen::VectorXd const &state, Mode mode, Rng &rng)
{
  Tensor2 const batch = state.transpose();
  return as_table(forward(batch, mode, rng).quantiles, 0, cfg_.action_count, cfg_.n_quantiles);
}

Tensor2 QuantileNetwork::table_eval(Eigen::VectorXd const &state)
{
  Tensor2 const batch = state.transpose();
  return as_table(forward_eval(batch).quantiles, 0, cfg_.action_count, cfg_.n_quantiles);
}

void QuantileNetwork::backward(Tensor2 const &grad_quantiles, NetworkTape const &tape)
{
  auto const n = static_cast<Index>(cfg_.n_quantiles);
  auto const actions = static_cast<Index>(cfg_.action_count);
  if (grad_quantiles.cols() != actions * n || grad_quantiles.rows() != tape.trunk.output_rows) {
    throw numerics::DimensionError("QuantileNetwork::backward: gradient " +
                                   numerics::shape_string(grad_quantiles.rows(), grad_quantiles.cols()));
  }
  Index const batch = grad_quantiles.rows();
  Tensor2 grad_value = Tensor2::Zero(batch, n);
  Tensor2 grad_adv(batch, actions * n);
  for (Index b = 0; b < batch; ++b) {
    for (Index a = 0; a < actions; ++a) {
      grad_value.row(b) += grad_quantiles.block(b, a * n, 1, n);
    }
    numerics::RowVector<double> const mean_grad = grad_value.row(b) / static_cast<double>(actions);
    for (Index a = 0; a < actions; ++a) {
      grad_adv.block(b, a * n, 1, n) = grad_quantiles.block(b, a * n, 1, n) - mean_grad;
    }
  }
  Tensor2 grad_features = value_.backward(grad_value, tape.value);
  grad_features += advantage_.backward(grad_adv, tape.advantage);
  trunk_.backward(grad_features, tape.trunk);
}

std::vector<numerics::Parameter *> QuantileNetwork::parameters()
{
  std::vector<numerics::Parameter *> out = trunk_.parameters();
  for (auto *p : value_.parameters()) {
    out.push_back(p);
  }
  for (auto *p : advantage_.parameters()) {
    out.push_back(p);
  }
  return out;
}

std::vector<numerics::Parameter const *> QuantileNetwork::parameters() const
{
  std::vector<numerics::Parameter const *> out = trunk_.parameters();
  for (auto const *p : value_.parameters()) {
    out.push_back(p);
  }
  for (auto const *p : advantage_.parameters()) {
    out.push_back(p);
  }
  return out;
}

void QuantileNetwork::zero_grad()
{
  for (auto *p : parameters()) {
    p->zero_grad();
  }
}

void QuantileNetwork::copy_parameters_from(QuantileNetwork const &other)
{
  auto dst = parameters();
  auto src = other.parameters();
  if (dst.size() != src.size()) {
    throw ConfigError("copy_parameters_from: architectures differ");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->rows() != src[i]->rows() || dst[i]->cols() != src[i]->cols()) {
      throw ConfigError("copy_parameters_from: parameter shapes differ");
    }
    dst[i]->value = src[i]->value;
  }
}

Tensor2 to_batch(std::vector<Eigen::VectorXd const *> const &states)
{
  if (states.empty()) {
    return Tensor2(0, 0);
  }
  Tensor2 batch(static_cast<Index>(states.size()), states.front()->size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    batch.row(static_cast<Index>(i)) = states[i]->transpose();
  }
  return batch;
}

Tensor2 as_table(Tensor2 const &quantiles, Eigen::Index sample, std::size_t action_count, std::size_t n_quantiles)
{
  auto const n = static_cast<Index>(n_quantiles);
  Tensor2 table(static_cast<Index>(action_count), n);
  for (Index a = 0; a < table.rows(); ++a) {
    table.row(a) = quantiles.block(sample, a * n, 1, n);
  }
  return table;
}

} // namespace cbm::agent
