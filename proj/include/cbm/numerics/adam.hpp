#pragma once

#include <cmath>
#include <span>

#include "cbm/numerics/layers.hpp"

namespace cbm::numerics {

struct AdamConfig
{
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update at step t (t >= 1); grads are zeroed afterwards.
// Throws TrainingError before touching any parameter if a gradient is not finite.
template <typename Scalar>
void adam_step(std::span<BasicParameter<Scalar> *const> params, AdamConfig const &cfg, long t)
{
  if (t < 1) {
    throw std::invalid_argument("adam_step: step count must be >= 1");
  }
  for (auto const *p : params) {
    if (!p->grad.allFinite()) {
      throw TrainingError("adam_step: non-finite gradient");
    }
  }
  Scalar const b1 = Scalar(cfg.beta1);
  Scalar const b2 = Scalar(cfg.beta2);
  Scalar const c1 = Scalar(1) - std::pow(b1, Scalar(t));
  Scalar const c2 = Scalar(1) - std::pow(b2, Scalar(t));
  Scalar const lr = Scalar(cfg.lr);
  Scalar const eps = Scalar(cfg.eps);
  for (auto *p : params) {
    p->adam_m = b1 * p->adam_m + (Scalar(1) - b1) * p->grad;
    p->adam_v = b2 * p->adam_v + (Scalar(1) - b2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (p->adam_m.array() / c1) / ((p->adam_v.array() / c2).sqrt() + eps);
    p->zero_grad();
  }
}

// Rescales all grads so their joint L2 norm is at most max_norm; returns the norm before clipping.
template <typename Scalar>
Scalar clip_grad_norm(std::span<BasicParameter<Scalar> *const> params, Scalar max_norm)
{
  Scalar sq = 0;
  for (auto const *p : params) {
    sq += p->grad.squaredNorm();
  }
  Scalar const norm = std::sqrt(sq);
  if (max_norm > Scalar(0) && norm > max_norm) {
    Scalar const scale = max_norm / norm;
    for (auto *p : params) {
      p->grad *= scale;
    }
  }
  return norm;
}

} // namespace cbm::numerics
