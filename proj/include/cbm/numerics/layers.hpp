#pragma once

#include <cmath>
#include <vector>

#include "cbm/numerics/tensor.hpp"

namespace cbm::numerics {

// A trainable tensor with its gradient accumulator and Adam moments.
template <typename Scalar>
struct BasicParameter
{
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> adam_m;
  Matrix<Scalar> adam_v;

  BasicParameter() = default;
  explicit BasicParameter(Matrix<Scalar> initial)
      : value(std::move(initial)),
        grad(Matrix<Scalar>::Zero(value.rows(), value.cols())),
        adam_m(Matrix<Scalar>::Zero(value.rows(), value.cols())),
        adam_v(Matrix<Scalar>::Zero(value.rows(), value.cols()))
  {
  }

  void zero_grad() { grad.setZero(); }
  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
};

using Parameter = BasicParameter<double>;

// x * W + b, with b broadcast over the batch rows.
template <typename Scalar>
Matrix<Scalar> affine_forward(Matrix<Scalar> const &x, BasicParameter<Scalar> const &w,
                              BasicParameter<Scalar> const &b)
{
  if (x.cols() != w.value.rows()) {
    throw DimensionError("affine_forward: input " + shape_string(x.rows(), x.cols()) +
                         " against weights " + shape_string(w.rows(), w.cols()));
  }
  if (b.value.rows() != 1 || b.value.cols() != w.value.cols()) {
    throw DimensionError("affine_forward: bias must be 1x" + std::to_string(w.value.cols()));
  }
  Matrix<Scalar> y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Index rows, Index cols, Scalar bound, Rng &rng)
{
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = dist(rng);
  }
  return m;
}

template <typename Scalar>
class Linear
{
public:
  Linear(Index in, Index out, Rng &rng)
      : weight_(uniform_matrix<Scalar>(in, out, Scalar(1) / std::sqrt(Scalar(in)), rng)),
        bias_(Matrix<Scalar>::Zero(1, out))
  {
  }

  Index in_features() const { return weight_.rows(); }
  Index out_features() const { return weight_.cols(); }

  Matrix<Scalar> forward(Matrix<Scalar> const &x) const { return affine_forward(x, weight_, bias_); }

  // Accumulates parameter grads; returns the gradient w.r.t. the cached input.
  Matrix<Scalar> backward(Matrix<Scalar> const &input, Matrix<Scalar> const &grad_out)
  {
    if (grad_out.cols() != out_features() || grad_out.rows() != input.rows()) {
      throw DimensionError("Linear::backward: gradient " + shape_string(grad_out.rows(), grad_out.cols()));
    }
    weight_.grad.noalias() += input.transpose() * grad_out;
    bias_.grad += grad_out.colwise().sum();
    return grad_out * weight_.value.transpose();
  }

  std::vector<BasicParameter<Scalar> *> parameters() { return {&weight_, &bias_}; }
  std::vector<BasicParameter<Scalar> const *> parameters() const { return {&weight_, &bias_}; }

  BasicParameter<Scalar> &weight() { return weight_; }
  BasicParameter<Scalar> &bias() { return bias_; }

private:
  BasicParameter<Scalar> weight_;
  BasicParameter<Scalar> bias_;
};

// Affine layer with factorised Gaussian parameter noise:
// W = W_mu + W_sigma (.) eps, eps_ij = f(e_in_i) f(e_out_j), f(x) = sgn(x) sqrt|x|.
template <typename Scalar>
class NoisyLinear
{
public:
  NoisyLinear(Index in, Index out, Scalar sigma_init, Rng &rng)
      : w_mu_(uniform_matrix<Scalar>(in, out, Scalar(1) / std::sqrt(Scalar(in)), rng)),
        w_sigma_(Matrix<Scalar>::Constant(in, out, sigma_init / std::sqrt(Scalar(in)))),
        b_mu_(Matrix<Scalar>::Zero(1, out)),
        b_sigma_(Matrix<Scalar>::Constant(1, out, sigma_init / std::sqrt(Scalar(in)))),
        eps_in_(RowVector<Scalar>::Zero(in)),
        eps_out_(RowVector<Scalar>::Zero(out))
  {
  }

  Index in_features() const { return w_mu_.rows(); }
  Index out_features() const { return w_mu_.cols(); }

  void resample_noise(Rng &rng)
  {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    auto scaled = [&] {
      Scalar const e = normal(rng);
      return std::copysign(std::sqrt(std::abs(e)), e);
    };
    for (Index i = 0; i < eps_in_.size(); ++i) {
      eps_in_(i) = scaled();
    }
    for (Index j = 0; j < eps_out_.size(); ++j) {
      eps_out_(j) = scaled();
    }
  }

  void zero_noise()
  {
    eps_in_.setZero();
    eps_out_.setZero();
  }

  void set_noise(RowVector<Scalar> eps_in, RowVector<Scalar> eps_out)
  {
    if (eps_in.size() != in_features() || eps_out.size() != out_features()) {
      throw DimensionError("NoisyLinear::set_noise: noise vector length mismatch");
    }
    eps_in_ = std::move(eps_in);
    eps_out_ = std::move(eps_out);
  }

  Matrix<Scalar> weight_noise() const { return eps_in_.transpose() * eps_out_; }

  Matrix<Scalar> effective_weight() const
  {
    return w_mu_.value + w_sigma_.value.cwiseProduct(weight_noise());
  }

  Matrix<Scalar> effective_bias() const { return b_mu_.value + b_sigma_.value.cwiseProduct(eps_out_); }

  Matrix<Scalar> forward(Matrix<Scalar> const &x) const
  {
    if (x.cols() != in_features()) {
      throw DimensionError("NoisyLinear::forward: input " + shape_string(x.rows(), x.cols()));
    }
    Matrix<Scalar> y = x * effective_weight();
    y.rowwise() += effective_bias().row(0);
    return y;
  }

  Matrix<Scalar> backward(Matrix<Scalar> const &input, Matrix<Scalar> const &grad_out)
  {
    if (grad_out.cols() != out_features() || grad_out.rows() != input.rows()) {
      throw DimensionError("NoisyLinear::backward: gradient " + shape_string(grad_out.rows(), grad_out.cols()));
    }
    Matrix<Scalar> const grad_w = input.transpose() * grad_out;
    RowVector<Scalar> const grad_b = grad_out.colwise().sum();
    w_mu_.grad += grad_w;
    w_sigma_.grad += grad_w.cwiseProduct(weight_noise());
    b_mu_.grad += grad_b;
    b_sigma_.grad += grad_b.cwiseProduct(eps_out_);
    return grad_out * effective_weight().transpose();
  }

  std::vector<BasicParameter<Scalar> *> parameters() { return {&w_mu_, &w_sigma_, &b_mu_, &b_sigma_}; }
  std::vector<BasicParameter<Scalar> const *> parameters() const
  {
    return {&w_mu_, &w_sigma_, &b_mu_, &b_sigma_};
  }

private:
  BasicParameter<Scalar> w_mu_;
  BasicParameter<Scalar> w_sigma_;
  BasicParameter<Scalar> b_mu_;
  BasicParameter<Scalar> b_sigma_;
  RowVector<Scalar> eps_in_;
  RowVector<Scalar> eps_out_;
};

} // namespace cbm::numerics
