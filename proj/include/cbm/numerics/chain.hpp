#pragma once

#include <variant>
#include <vector>

#include "cbm/numerics/layers.hpp"

namespace cbm::numerics {

enum class Mode
{
  kTrain,
  kEval
};

enum class Activation
{
  kNone,
  kRelu
};

// What one forward pass through a Chain leaves behind for backward().
template <typename Scalar>
struct Tape
{
  struct Record
  {
    Matrix<Scalar> input;
    Matrix<Scalar> pre_activation;
    Matrix<Scalar> dropout_mask; // empty when dropout was inactive
  };
  std::vector<Record> records;
  Index output_rows = 0;
  Index output_cols = 0;
};

// A fixed feedforward sequence of (affine or noisy-affine) layers, each with an
// optional ReLU and inverted dropout after it.
template <typename Scalar>
class Chain
{
public:
  using Layer = std::variant<Linear<Scalar>, NoisyLinear<Scalar>>;

  struct Stage
  {
    Layer layer;
    Activation activation = Activation::kNone;
    Scalar dropout = Scalar(0);
  };

  Chain() = default;

  void add_linear(Index in, Index out, Activation act, Rng &rng, Scalar dropout = Scalar(0))
  {
    check_input(in);
    stages_.push_back(Stage{Linear<Scalar>(in, out, rng), act, dropout});
  }

  void add_noisy(Index in, Index out, Activation act, Scalar sigma_init, Rng &rng, Scalar dropout = Scalar(0))
  {
    check_input(in);
    stages_.push_back(Stage{NoisyLinear<Scalar>(in, out, sigma_init, rng), act, dropout});
  }

  Index in_features() const
  {
    return stages_.empty() ? 0 : std::visit([](auto const &l) { return l.in_features(); }, stages_.front().layer);
  }
  Index out_features() const
  {
    return stages_.empty() ? 0 : std::visit([](auto const &l) { return l.out_features(); }, stages_.back().layer);
  }

  std::vector<Stage> &stages() { return stages_; }
  std::vector<Stage> const &stages() const { return stages_; }

  void resample_noise(Rng &rng)
  {
    for (auto &s : stages_) {
      if (auto *noisy = std::get_if<NoisyLinear<Scalar>>(&s.layer)) {
        noisy->resample_noise(rng);
      }
    }
  }

  void zero_noise()
  {
    for (auto &s : stages_) {
      if (auto *noisy = std::get_if<NoisyLinear<Scalar>>(&s.layer)) {
        noisy->zero_noise();
      }
    }
  }

  // Dropout draws from `rng` in train mode only; `rng` may be null when every
  // stage has zero dropout or the mode is eval.
  Matrix<Scalar> forward(Matrix<Scalar> const &x, Mode mode, Rng *rng, Tape<Scalar> &tape) const
  {
    tape.records.clear();
    tape.records.reserve(stages_.size());
    Matrix<Scalar> h = x;
    for (auto const &s : stages_) {
      typename Tape<Scalar>::Record rec;
      rec.input = h;
      rec.pre_activation = std::visit([&](auto const &l) { return l.forward(h); }, s.layer);
      h = s.activation == Activation::kRelu ? relu(rec.pre_activation) : rec.pre_activation;
      if (mode == Mode::kTrain && s.dropout > Scalar(0)) {
        if (rng == nullptr) {
          throw std::invalid_argument("Chain::forward: dropout requires a random stream");
        }
        std::bernoulli_distribution keep(1.0 - static_cast<double>(s.dropout));
        Scalar const scale = Scalar(1) / (Scalar(1) - s.dropout);
        rec.dropout_mask.resize(h.rows(), h.cols());
        for (Index i = 0; i < h.size(); ++i) {
          rec.dropout_mask.data()[i] = keep(*rng) ? scale : Scalar(0);
        }
        h = h.cwiseProduct(rec.dropout_mask);
      }
      tape.records.push_back(std::move(rec));
    }
    tape.output_rows = h.rows();
    tape.output_cols = h.cols();
    return h;
  }

  Matrix<Scalar> forward(Matrix<Scalar> const &x) const
  {
    Tape<Scalar> scratch;
    return forward(x, Mode::kEval, nullptr, scratch);
  }

  // Accumulates d(loss)/d(param) into every parameter's grad; returns d(loss)/d(input).
  Matrix<Scalar> backward(Matrix<Scalar> const &loss_grad, Tape<Scalar> const &tape)
  {
    if (tape.records.size() != stages_.size()) {
      throw DimensionError("Chain::backward: tape does not belong to this chain");
    }
    if (loss_grad.rows() != tape.output_rows || loss_grad.cols() != tape.output_cols) {
      throw DimensionError("Chain::backward: gradient " + shape_string(loss_grad.rows(), loss_grad.cols()) +
                           " against output " + shape_string(tape.output_rows, tape.output_cols));
    }
    Matrix<Scalar> g = loss_grad;
    for (std::size_t k = stages_.size(); k-- > 0;) {
      auto &s = stages_[k];
      auto const &rec = tape.records[k];
      if (rec.dropout_mask.size() != 0) {
        g = g.cwiseProduct(rec.dropout_mask);
      }
      if (s.activation == Activation::kRelu) {
        g = relu_backward(rec.pre_activation, g);
      }
      g = std::visit([&](auto &l) { return l.backward(rec.input, g); }, s.layer);
    }
    return g;
  }

  std::vector<BasicParameter<Scalar> *> parameters()
  {
    std::vector<BasicParameter<Scalar> *> out;
    for (auto &s : stages_) {
      for (auto *p : std::visit([](auto &l) { return l.parameters(); }, s.layer)) {
        out.push_back(p);
      }
    }
    return out;
  }

  std::vector<BasicParameter<Scalar> const *> parameters() const
  {
    std::vector<BasicParameter<Scalar> const *> out;
    for (auto const &s : stages_) {
      for (auto const *p : std::visit([](auto const &l) { return l.parameters(); }, s.layer)) {
        out.push_back(p);
      }
    }
    return out;
  }

private:
  void check_input(Index in) const
  {
    if (!stages_.empty() && out_features() != in) {
      throw DimensionError("Chain: layer input " + std::to_string(in) + " does not follow output " +
                           std::to_string(out_features()));
    }
  }

  std::vector<Stage> stages_;
};

} // namespace cbm::numerics
