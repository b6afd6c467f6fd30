#pragma once

#include <vector>

#include "cbm/errors.hpp"
#include "cbm/numerics/chain.hpp"
#include "cbm/numerics/tensor.hpp"

namespace cbm::agent {

using numerics::Mode;
using numerics::Tensor2;

struct NetworkConfig
{
  std::size_t state_dim = 0;
  std::size_t action_count = 0;
  std::size_t n_quantiles = 51;
  std::vector<std::size_t> trunk_widths{256, 128, 64};
  std::vector<std::size_t> head_widths{64, 32};
  bool noisy = true;
  double sigma_init = 0.5;
  double dropout = 0.0; // applied after each trunk layer in train mode

  void validate() const;
};

struct NetworkOutput
{
  Tensor2 quantiles; // batch x (actions * N); entry (a, j) of sample b at column a * N + j
  Tensor2 value;     // batch x N
  Tensor2 advantage; // batch x (actions * N), before centering
};

struct NetworkTape
{
  numerics::Tape<double> trunk;
  numerics::Tape<double> value;
  numerics::Tape<double> advantage;
};

// Dueling quantile network: shared ReLU trunk, then a value stream and an
// advantage stream whose outputs combine per quantile as V + A - mean_a A.
// The final layer of each stream is noisy when `noisy` is set.
class QuantileNetwork
{
public:
  QuantileNetwork(NetworkConfig cfg, Rng &init_rng);

  // Train mode samples fresh layer noise from `rng`; eval mode runs with zero noise.
  NetworkOutput forward(Tensor2 const &states, Mode mode, Rng &rng, NetworkTape *tape = nullptr);
  NetworkOutput forward_eval(Tensor2 const &states);

  // (actions x N) table for a single state.
  Tensor2 table(Eigen::VectorXd const &state, Mode mode, Rng &rng);
  Tensor2 table_eval(Eigen::VectorXd const &state);

  // Accumulates parameter grads from d(loss)/d(quantiles output).
  void backward(Tensor2 const &grad_quantiles, NetworkTape const &tape);

  std::vector<numerics::Parameter *> parameters();
  std::vector<numerics::Parameter const *> parameters() const;
  void zero_grad();
  void copy_parameters_from(QuantileNetwork const &other);

  NetworkConfig const &config() const { return cfg_; }
  numerics::Chain<double> &trunk() { return trunk_; }
  numerics::Chain<double> &value_stream() { return value_; }
  numerics::Chain<double> &advantage_stream() { return advantage_; }

private:
  NetworkOutput run(Tensor2 const &states, Mode mode, Rng *rng, NetworkTape &tape);

  NetworkConfig cfg_;
  numerics::Chain<double> trunk_;
  numerics::Chain<double> value_;
  numerics::Chain<double> advantage_;
};

Tensor2 to_batch(std::vector<Eigen::VectorXd const *> const &states);

// Reshape one sample's flat (actions * N) row into an (actions x N) table.
Tensor2 as_table(Tensor2 const &quantiles, Eigen::Index sample, std::size_t action_count, std::size_t n_quantiles);

} // namespace cbm::agent
