/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_OPTIM_HPP
#define KFNO_CORE_OPTIM_HPP

#include "core/common.hpp"
#include "core/params.hpp"

#include <limits>

namespace kfno {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled decay coefficient (AdamW path)
};

// First/second-moment state for one flat parameter vector.
struct OptimState {
  Vector m;  // first moment
  Vector v;  // second moment
  long step = 0;

  static OptimState create(Index dim) {
    OptimState s;
    s.m = Vector::Zero(dim);
    s.v = Vector::Zero(dim);
    return s;
  }
};

// One Adam step (bias-corrected moments), in place:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,  n <- n+1
//   theta <- theta - lr * (m/(1-b1^n)) / (sqrt(v/(1-b2^n)) + eps)
// `lr` is the scheduled rate for this step. Throws Error on non-finite
// gradients, naming the offending parameter block via `layout` when given.
void adam_step(Vector& theta, const Vector& grad, OptimState& state,
               const OptimConfig& cfg, double lr,
               const ParamLayout* layout = nullptr);

// AdamW: the decoupled decay theta <- theta - lr*wd*theta is applied BEFORE
// the adaptive update, which then proceeds exactly as Adam. With
// weight_decay == 0 this is bit-for-bit identical to adam_step.
void adamw_step(Vector& theta, const Vector& grad, OptimState& state,
                const OptimConfig& cfg, double lr,
                const ParamLayout* layout = nullptr);

// Step-decay schedule: lr0 * gamma^floor(epoch / step_epochs).
double lr_at(int epoch, double lr0, int step_epochs, double gamma);

// Patience-based early stopping on validation loss; improvement must be a
// strict decrease. The caller snapshots/restores parameters.
class EarlyStopper {
 public:
  EarlyStopper(int patience) : patience_(patience) {}

  // Returns true when this epoch improved on the best value.
  bool observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      bad_epochs_ = 0;
      return true;
    }
    ++bad_epochs_;
    return false;
  }

  bool should_stop() const { return bad_epochs_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace kfno

#endif  // KFNO_CORE_OPTIM_HPP
