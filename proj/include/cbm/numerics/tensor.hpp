#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cbm {

// One stream type for every stochastic component so seeded runs replay exactly.
using Rng = std::mt19937_64;

} // namespace cbm

namespace cbm::numerics {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Tensor2 = Matrix<double>;

struct DimensionError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct TrainingError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline std::string shape_string(Index rows, Index cols)
{
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename DerivedA, typename DerivedB>
auto matmul(Eigen::MatrixBase<DerivedA> const &a, Eigen::MatrixBase<DerivedB> const &b)
    -> Matrix<typename DerivedA::Scalar>
{
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.rows(), a.cols()) + " times " +
                         shape_string(b.rows(), b.cols()));
  }
  return a * b;
}

template <typename Derived>
auto relu(Eigen::MatrixBase<Derived> const &x) -> Matrix<typename Derived::Scalar>
{
  using Scalar = typename Derived::Scalar;
  return x.cwiseMax(Scalar(0));
}

// Gradient of relu w.r.t. its input, given the input it saw on the forward pass.
template <typename DerivedX, typename DerivedG>
auto relu_backward(Eigen::MatrixBase<DerivedX> const &pre_activation,
                   Eigen::MatrixBase<DerivedG> const &grad_out) -> Matrix<typename DerivedX::Scalar>
{
  using Scalar = typename DerivedX::Scalar;
  if (pre_activation.rows() != grad_out.rows() || pre_activation.cols() != grad_out.cols()) {
    throw DimensionError("relu_backward: gradient shape mismatch");
  }
  return (pre_activation.array() > Scalar(0)).select(grad_out, Scalar(0));
}

template <typename Derived>
bool all_finite(Eigen::DenseBase<Derived> const &x)
{
  return x.allFinite();
}

} // namespace cbm::numerics
