/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/pipeline.hpp"

namespace kfno {
namespace {

// Per-pair forward state kept alive for the reverse sweep.
struct PairForward {
  MlpCache enc_cur, enc_next, dec_pred, dec_rec;
  Vector z_cur, z_next_pred, z_next_enc;
  double q_hat = 0.0, q_rec = 0.0;
  Matrix fno_in;  // N x 4
  Matrix s_hat;   // N x 1
  FnoCache fno_cache;
  LossBreakdown parts;  // unweighted components of this pair
};

void check_pair(const PairSample& p) {
  require(p.grid_next != nullptr && p.soc_next != nullptr,
          "joint loss: pair sample missing its sensor grid or SoC target");
  require(p.grid_next->rows() == p.soc_next->size(),
          "joint loss: sensor grid and SoC target lengths differ");
}

void pair_forward(const KoopmanModel& koop, const FnoModel& fno,
                  const PairSample& p, double huber_delta, bool coupled,
                  bool want_cache, PairForward& f) {
  check_pair(p);
  const double n_k = static_cast<double>(koop.latent_dim());

  Matrix x_cur(1, 1);
  x_cur(0, 0) = p.q_cur;
  f.z_cur = mlp_forward(koop.encoder, x_cur, want_cache ? &f.enc_cur : nullptr)
                .row(0)
                .transpose();
  f.z_next_pred = koop.k_op * f.z_cur + koop.b_op * p.u_bar_cur;
  f.q_hat = mlp_forward(koop.decoder, Matrix(f.z_next_pred.transpose()),
                        want_cache ? &f.dec_pred : nullptr)(0, 0);
  f.q_rec = mlp_forward(koop.decoder, Matrix(f.z_cur.transpose()),
                        want_cache ? &f.dec_rec : nullptr)(0, 0);

  Matrix x_next(1, 1);
  x_next(0, 0) = p.q_next;
  f.z_next_enc = mlp_forward(koop.encoder, x_next, want_cache ? &f.enc_next : nullptr)
                     .row(0)
                     .transpose();

  f.parts.rec = std::abs(p.q_cur - f.q_rec);
  f.parts.lin = (f.z_next_enc - f.z_next_pred).cwiseAbs().sum() / n_k;
  f.parts.pred = std::abs(p.q_next - f.q_hat);

  // The SoC head sees the sensors of the target cycle plus the capacity
  // channel: the model's own forecast when coupled, the measurement when not.
  const double q_in = coupled ? f.q_hat : p.q_next;
  const Index n = p.grid_next->rows();
  f.fno_in.resize(n, 4);
  f.fno_in.leftCols(3) = *p.grid_next;
  f.fno_in.col(3).setConstant(q_in);
  f.s_hat = fno_forward(fno, f.fno_in, want_cache ? &f.fno_cache : nullptr);

  double acc = 0.0;
  for (Index t = 0; t < n; ++t)
    acc += huber(f.s_hat(t, 0) - (*p.soc_next)(t), huber_delta);
  f.parts.soc = acc / static_cast<double>(n);
}

void pair_backward(const KoopmanModel& koop, const FnoModel& fno,
                   const PairSample& p, PairForward& f, const LossWeights& lw,
                   double huber_delta, bool coupled, double wscale,
                   KoopmanModel& kg, FnoModel& fg) {
  const double n_k = static_cast<double>(koop.latent_dim());
  const Index n = p.grid_next->rows();

  // SoC head.
  Matrix d_s(n, 1);
  const double soc_scale = wscale * lw.soc / static_cast<double>(n);
  for (Index t = 0; t < n; ++t)
    d_s(t, 0) = soc_scale * huber_grad(f.s_hat(t, 0) - (*p.soc_next)(t), huber_delta);
  Matrix d_in = fno_backward(fno, f.fno_cache, d_s, fg);

  // Capacity forecast: the one-cycle error plus (when coupled) whatever the
  // SoC head wants from its broadcast capacity channel.
  double d_qhat = -wscale * lw.pred * sign0(p.q_next - f.q_hat);
  if (coupled) d_qhat += d_in.col(3).sum();
  Matrix d_qhat_m(1, 1);
  d_qhat_m(0, 0) = d_qhat;
  Vector d_z_next_pred =
      mlp_backward(koop.decoder, f.dec_pred, d_qhat_m, kg.decoder).row(0).transpose();

  // Latent-consistency penalty touches both the linear prediction and the
  // encoding of the next capacity.
  const double cl = wscale * lw.lin / n_k;
  Vector sgn = (f.z_next_enc - f.z_next_pred)
                   .unaryExpr([](double v) { return sign0(v); });
  d_z_next_pred -= cl * sgn;
  Matrix d_z_enc = (cl * sgn).transpose();
  mlp_backward(koop.encoder, f.enc_next, d_z_enc, kg.encoder);

  // Linear latent update.
  kg.k_op.noalias() += d_z_next_pred * f.z_cur.transpose();
  kg.b_op.noalias() += d_z_next_pred * p.u_bar_cur.transpose();
  Vector d_z_cur = koop.k_op.transpose() * d_z_next_pred;

  // Autoencoding branch shares the encoder evaluation at q_cur.
  Matrix d_qrec_m(1, 1);
  d_qrec_m(0, 0) = -wscale * lw.rec * sign0(p.q_cur - f.q_rec);
  d_z_cur +=
      mlp_backward(koop.decoder, f.dec_rec, d_qrec_m, kg.decoder).row(0).transpose();
  Matrix d_z_cur_m = d_z_cur.transpose();
  mlp_backward(koop.encoder, f.enc_cur, d_z_cur_m, kg.encoder);
}

void check_batch(const std::vector<PairSample>& batch,
                 const std::vector<double>& weights) {
  require(!batch.empty(), "joint loss: empty batch");
  require(batch.size() == weights.size(),
          "joint loss: batch and weight counts differ");
}

}  // namespace

LossBreakdown joint_loss(const KoopmanModel& koop, const FnoModel& fno,
                         const std::vector<PairSample>& batch,
                         const std::vector<double>& weights,
                         const LossWeights& lw, double huber_delta, bool coupled) {
  check_batch(batch, weights);
  LossBreakdown agg;
  PairForward f;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    pair_forward(koop, fno, batch[i], huber_delta, coupled, /*want_cache=*/false, f);
    agg.rec += weights[i] * f.parts.rec;
    agg.lin += weights[i] * f.parts.lin;
    agg.pred += weights[i] * f.parts.pred;
    agg.soc += weights[i] * f.parts.soc;
  }
  agg.total = total_loss(agg, lw);
  return agg;
}

LossBreakdown joint_loss_grad(const KoopmanModel& koop, const FnoModel& fno,
                              const std::vector<PairSample>& batch,
                              const std::vector<double>& weights,
                              const LossWeights& lw, double huber_delta,
                              bool coupled, KoopmanModel& koop_grads,
                              FnoModel& fno_grads) {
  check_batch(batch, weights);
  LossBreakdown agg;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PairForward f;
    pair_forward(koop, fno, batch[i], huber_delta, coupled, /*want_cache=*/true, f);
    agg.rec += weights[i] * f.parts.rec;
    agg.lin += weights[i] * f.parts.lin;
    agg.pred += weights[i] * f.parts.pred;
    agg.soc += weights[i] * f.parts.soc;
    pair_backward(koop, fno, batch[i], f, lw, huber_delta, coupled, weights[i],
                  koop_grads, fno_grads);
  }
  agg.total = total_loss(agg, lw);
  return agg;
}

}  // namespace kfno
