/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/optim.hpp"

namespace kfno {
namespace {

void check_finite(const Vector& grad, const ParamLayout* layout) {
  if (grad.allFinite()) return;
  for (Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad(i))) {
      std::string where = layout != nullptr
                              ? layout->block_of(static_cast<std::size_t>(i))
                              : ("coordinate " + std::to_string(i));
      throw Error("optimizer: non-finite gradient in " + where +
                  "; step aborted");
    }
  }
}

// Shared adaptive core. Scalar loop on purpose: the update is then a direct
// transcription of the textbook recurrences, easy to compare digit-for-digit
// against an independent reference.
void adaptive_update(Vector& theta, const Vector& grad, OptimState& state,
                     const OptimConfig& cfg, double lr) {
  state.step += 1;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (Index i = 0; i < theta.size(); ++i) {
    const double g = grad(i);
    state.m(i) = b1 * state.m(i) + (1.0 - b1) * g;
    state.v(i) = b2 * state.v(i) + (1.0 - b2) * g * g;
    const double m_hat = state.m(i) / bc1;
    const double v_hat = state.v(i) / bc2;
    theta(i) -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void check_shapes(const Vector& theta, const Vector& grad, const OptimState& state) {
  require(theta.size() == grad.size(),
          "optimizer: parameter/gradient size mismatch");
  require(theta.size() == state.m.size() && theta.size() == state.v.size(),
          "optimizer: state size mismatch");
}

}  // namespace

void adam_step(Vector& theta, const Vector& grad, OptimState& state,
               const OptimConfig& cfg, double lr, const ParamLayout* layout) {
  check_shapes(theta, grad, state);
  check_finite(grad, layout);
  adaptive_update(theta, grad, state, cfg, lr);
}

void adamw_step(Vector& theta, const Vector& grad, OptimState& state,
                const OptimConfig& cfg, double lr, const ParamLayout* layout) {
  check_shapes(theta, grad, state);
  check_finite(grad, layout);
  if (cfg.weight_decay != 0.0) {
    for (Index i = 0; i < theta.size(); ++i)
      theta(i) -= lr * cfg.weight_decay * theta(i);
  }
  adaptive_update(theta, grad, state, cfg, lr);
}

double lr_at(int epoch, double lr0, int step_epochs, double gamma) {
  require(epoch >= 0, "lr_at: epoch must be non-negative");
  require(step_epochs > 0, "lr_at: step_epochs must be positive");
  return lr0 * std::pow(gamma, static_cast<double>(epoch / step_epochs));
}

}  // namespace kfno
