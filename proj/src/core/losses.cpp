/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/losses.hpp"

namespace kfno {

double rec_loss(const std::vector<double>& q, const KoopmanModel& model) {
  require(!q.empty(), "rec_loss: empty batch");
  double acc = 0.0;
  for (double qi : q) acc += std::abs(qi - model.decode(model.encode(qi)));
  return acc / static_cast<double>(q.size());
}

double lin_loss(const std::vector<double>& q, const std::vector<double>& q_next,
                const std::vector<Vector>& u_bars, const KoopmanModel& model) {
  require(!q.empty(), "lin_loss: empty batch");
  require(q.size() == q_next.size() && q.size() == u_bars.size(),
          "lin_loss: batch size mismatch");
  const double n_k = static_cast<double>(model.latent_dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vector z_next = model.latent_step(model.encode(q[i]), u_bars[i]);
    Vector z_target = model.encode(q_next[i]);
    acc += (z_target - z_next).cwiseAbs().sum() / n_k;
  }
  return acc / static_cast<double>(q.size());
}

double pred_loss(const std::vector<double>& q, const std::vector<double>& q_next,
                 const std::vector<Vector>& u_bars, const KoopmanModel& model) {
  require(!q.empty(), "pred_loss: empty batch");
  require(q.size() == q_next.size() && q.size() == u_bars.size(),
          "pred_loss: batch size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    acc += std::abs(q_next[i] - model.forecast_next(q[i], u_bars[i]));
  return acc / static_cast<double>(q.size());
}

double soc_loss(const std::vector<Vector>& soc_true,
                const std::vector<Vector>& soc_pred, double delta) {
  require(delta > 0.0, "soc_loss: delta must be positive");
  require(!soc_true.empty(), "soc_loss: empty batch");
  require(soc_true.size() == soc_pred.size(), "soc_loss: batch size mismatch");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < soc_true.size(); ++i) {
    require(soc_true[i].size() == soc_pred[i].size(),
            "soc_loss: trajectory length mismatch");
    for (Index t = 0; t < soc_true[i].size(); ++t) {
      acc += huber(soc_pred[i](t) - soc_true[i](t), delta);
      ++count;
    }
  }
  require(count > 0, "soc_loss: empty trajectories");
  return acc / static_cast<double>(count);
}

double total_loss(const LossBreakdown& components, const LossWeights& weights) {
  return weights.rec * components.rec + weights.lin * components.lin +
         weights.pred * components.pred + weights.soc * components.soc;
}

}  // namespace kfno
