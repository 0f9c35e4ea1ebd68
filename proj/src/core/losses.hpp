/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_LOSSES_HPP
#define KFNO_CORE_LOSSES_HPP

#include "core/koopman.hpp"

namespace kfno {

struct LossWeights {
  double rec = 1.0;
  double lin = 1e-4;
  double pred = 1.0;
  double soc = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double rec = 0.0;
  double lin = 0.0;
  double pred = 0.0;
  double soc = 0.0;
};

// Huber penalty with quadratic core and linear tails.
inline double huber(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

// d/de huber(e, delta); the L1 subgradient convention sign(0) = 0 applies at
// the origin of the absolute-value losses below as well.
inline double huber_grad(double e, double delta) {
  if (e > delta) return delta;
  if (e < -delta) return -delta;
  return e;
}

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Mean absolute autoencoding error of the scaled capacities.
double rec_loss(const std::vector<double>& q, const KoopmanModel& model);

// Mean (over batch and latent coordinates) absolute mismatch between the
// encoded next capacity and the linear latent prediction.
double lin_loss(const std::vector<double>& q, const std::vector<double>& q_next,
                const std::vector<Vector>& u_bars, const KoopmanModel& model);

// Mean absolute one-cycle capacity forecast error.
double pred_loss(const std::vector<double>& q, const std::vector<double>& q_next,
                 const std::vector<Vector>& u_bars, const KoopmanModel& model);

// Mean Huber penalty over every time step of every trajectory in the batch.
double soc_loss(const std::vector<Vector>& soc_true,
                const std::vector<Vector>& soc_pred, double delta);

// Weighted sum of the four components.
double total_loss(const LossBreakdown& components, const LossWeights& weights);

}  // namespace kfno

#endif  // KFNO_CORE_LOSSES_HPP
