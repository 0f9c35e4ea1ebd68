/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/pipeline.hpp"

namespace kfno {
namespace {

struct WeightedPair {
  PairSample sample;
  double weight = 0.0;        // 1 / (battery_count * pair_count_of_battery)
  std::size_t battery = 0;    // index into the training pool
};

// Consecutive-cycle pairs within one battery's cycle list. A pair is formed
// only when the cycle indexes are truly adjacent, so a series with gaps (for
// example one whose interior validation cycles were removed) never produces a
// pair that spans more than one cycle of degradation. `extra_head`, when
// given, is prepended and participates under the same adjacency rule.
void append_pairs(const std::vector<Cycle>& cycles, const Cycle* extra_head,
                  std::size_t battery, std::vector<WeightedPair>* out) {
  std::vector<const Cycle*> seq;
  if (extra_head != nullptr) seq.push_back(extra_head);
  for (const Cycle& c : cycles) seq.push_back(&c);
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    if (seq[i + 1]->cycle_index != seq[i]->cycle_index + 1) continue;
    WeightedPair wp;
    wp.sample.q_cur = seq[i]->q_scaled;
    wp.sample.q_next = seq[i + 1]->q_scaled;
    wp.sample.u_bar_cur = seq[i]->u_bar;
    wp.sample.grid_next = &seq[i + 1]->grid;
    wp.sample.soc_next = &seq[i + 1]->soc_scaled;
    wp.battery = battery;
    out->push_back(std::move(wp));
  }
}

void assign_equal_battery_weights(std::vector<WeightedPair>* pairs,
                                  std::size_t battery_count) {
  std::vector<std::size_t> per_battery(battery_count, 0);
  for (const WeightedPair& wp : *pairs) per_battery[wp.battery]++;
  for (WeightedPair& wp : *pairs) {
    wp.weight = 1.0 / (static_cast<double>(battery_count) *
                       static_cast<double>(per_battery[wp.battery]));
  }
}

void zero_blocks(std::vector<ParamBlock>& blocks) {
  for (ParamBlock& b : blocks) std::fill(b.data, b.data + b.size, 0.0);
}

LossBreakdown weighted_eval(const KoopmanModel& koop, const FnoModel& fno,
                            const std::vector<WeightedPair>& pairs,
                            const LossWeights& lw, double huber_delta,
                            bool coupled) {
  double wsum = 0.0;
  for (const WeightedPair& wp : pairs) wsum += wp.weight;
  LossBreakdown agg;
  std::vector<PairSample> one(1);
  std::vector<double> w(1);
  for (const WeightedPair& wp : pairs) {
    one[0] = wp.sample;
    w[0] = wp.weight / wsum;
    LossBreakdown part = joint_loss(koop, fno, one, w, lw, huber_delta, coupled);
    agg.rec += part.rec;
    agg.lin += part.lin;
    agg.pred += part.pred;
    agg.soc += part.soc;
  }
  agg.total = total_loss(agg, lw);
  return agg;
}

}  // namespace

TrainOutput pooled_train(const std::vector<CycleSeries>& train_sets,
                         const std::vector<CycleSeries>& val_sets,
                         const RunConfig& cfg, const TrainOutput* initial,
                         int max_epochs_override) {
  require(!train_sets.empty(), "training: no batteries in the pool");
  require(val_sets.empty() || val_sets.size() == train_sets.size(),
          "training: validation pool must be empty or match the training pool");

  const std::size_t battery_count = train_sets.size();
  std::vector<WeightedPair> train_pairs;
  for (std::size_t b = 0; b < battery_count; ++b)
    append_pairs(train_sets[b], nullptr, b, &train_pairs);
  require(!train_pairs.empty(),
          "training: need at least one battery with two consecutive cycles");
  assign_equal_battery_weights(&train_pairs, battery_count);

  std::vector<WeightedPair> val_pairs;
  if (!val_sets.empty()) {
    for (std::size_t b = 0; b < battery_count; ++b) {
      if (val_sets[b].empty()) continue;
      const Cycle* head =
          train_sets[b].empty() ? nullptr : &train_sets[b].back();
      append_pairs(val_sets[b], head, b, &val_pairs);
    }
    if (!val_pairs.empty()) assign_equal_battery_weights(&val_pairs, battery_count);
  }

  Rng rng(cfg.seed);
  TrainOutput out;
  if (initial != nullptr) {
    out.koopman = initial->koopman;
    out.fno = initial->fno;
  } else {
    out.koopman = KoopmanModel::create(cfg.koopman, rng);
    out.fno = FnoModel::create(cfg.fno, rng);
  }
  out.koopman.rho_max = cfg.rho_max;
  {
    // Establish the stability bound before the first step is ever logged.
    ClipResult init_clip = spectral_clip(out.koopman.k_op, cfg.rho_max);
    out.koopman.k_op = init_clip.k;
  }

  std::vector<ParamBlock> k_blocks = out.koopman.param_blocks();
  std::vector<ParamBlock> f_blocks = out.fno.param_blocks();
  const ParamLayout k_layout = layout_of(k_blocks);
  const ParamLayout f_layout = layout_of(f_blocks);

  KoopmanModel k_grads = koopman_zeros_like(out.koopman);
  FnoModel f_grads = fno_zeros_like(out.fno);
  std::vector<ParamBlock> kg_blocks = k_grads.param_blocks();
  std::vector<ParamBlock> fg_blocks = f_grads.param_blocks();

  OptimState k_state = OptimState::create(k_layout.total);
  OptimState f_state = OptimState::create(f_layout.total);
  OptimConfig k_opt;
  k_opt.lr = cfg.koopman_lr;
  OptimConfig f_opt;
  f_opt.lr = cfg.fno_lr();
  f_opt.weight_decay = cfg.fno_weight_decay;

  const int max_epochs =
      max_epochs_override > 0 ? max_epochs_override : cfg.train.max_epochs;
  EarlyStopper stopper(cfg.train.patience);
  Vector best_k, best_f;
  out.best_epoch = -1;

  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.batch_size()));

  std::vector<PairSample> batch;
  std::vector<double> batch_w;

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    const double lr_k =
        lr_at(epoch, cfg.koopman_lr, cfg.train.lr_step_epochs, cfg.train.lr_gamma);
    const double lr_f =
        lr_at(epoch, cfg.fno_lr(), cfg.train.lr_step_epochs, cfg.train.lr_gamma);

    rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr_koopman = lr_k;
    rec.lr_fno = lr_f;
    rec.battery_weight_sums.assign(battery_count, 0.0);
    double total_num = 0.0, total_den = 0.0;
    LossBreakdown epoch_parts;

    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      batch_w.clear();
      double wsum = 0.0;
      for (std::size_t j = start; j < stop; ++j)
        wsum += train_pairs[order[j]].weight;
      for (std::size_t j = start; j < stop; ++j) {
        const WeightedPair& wp = train_pairs[order[j]];
        batch.push_back(wp.sample);
        batch_w.push_back(wp.weight / wsum);
        rec.battery_weight_sums[wp.battery] += wp.weight / wsum;
      }

      zero_blocks(kg_blocks);
      zero_blocks(fg_blocks);
      LossBreakdown parts =
          joint_loss_grad(out.koopman, out.fno, batch, batch_w, cfg.loss_weights,
                          cfg.huber_delta, cfg.coupled, k_grads, f_grads);
      if (!std::isfinite(parts.total)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss " << parts.total
            << " at epoch " << epoch << ", batch starting at sample " << start;
        throw Error(msg.str());
      }

      Vector theta_k = flatten(k_blocks);
      Vector grad_k = flatten(kg_blocks);
      adam_step(theta_k, grad_k, k_state, k_opt, lr_k, &k_layout);
      unflatten(theta_k, k_blocks);

      Vector theta_f = flatten(f_blocks);
      Vector grad_f = flatten(fg_blocks);
      adamw_step(theta_f, grad_f, f_state, f_opt, lr_f, &f_layout);
      unflatten(theta_f, f_blocks);

      ClipResult clip = spectral_clip(out.koopman.k_op, cfg.rho_max);
      out.koopman.k_op = clip.k;
      switch (clip.outcome) {
        case ClipOutcome::kUnchanged:
          break;
        case ClipOutcome::kClipped:
          rec.clip_rescaled++;
          break;
        case ClipOutcome::kScaledFallback:
          rec.clip_fallback++;
          break;
        case ClipOutcome::kEigFailed:
          rec.clip_failed++;
          break;
      }

      total_num += parts.total * wsum;
      total_den += wsum;
      epoch_parts.rec += parts.rec * wsum;
      epoch_parts.lin += parts.lin * wsum;
      epoch_parts.pred += parts.pred * wsum;
      epoch_parts.soc += parts.soc * wsum;
    }

    rec.train_total = total_num / total_den;
    rec.rec = epoch_parts.rec / total_den;
    rec.lin = epoch_parts.lin / total_den;
    rec.pred = epoch_parts.pred / total_den;
    rec.soc = epoch_parts.soc / total_den;

    if (!val_pairs.empty()) {
      rec.val_total = weighted_eval(out.koopman, out.fno, val_pairs,
                                    cfg.loss_weights, cfg.huber_delta, cfg.coupled)
                          .total;
    } else {
      rec.val_total = rec.train_total;
    }
    if (!std::isfinite(rec.val_total)) {
      std::ostringstream msg;
      msg << "training diverged: non-finite validation loss at epoch " << epoch;
      throw Error(msg.str());
    }

    try {
      rec.rho = spectrum(out.koopman.k_op).rho;
    } catch (const Error&) {
      rec.rho = std::numeric_limits<double>::quiet_NaN();
      rec.clip_failed++;
    }
    out.history.push_back(rec);

    if (stopper.observe(rec.val_total)) {
      best_k = flatten(k_blocks);
      best_f = flatten(f_blocks);
      out.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }

  require(out.best_epoch >= 0, "training: no epoch produced a usable model");
  unflatten(best_k, k_blocks);
  unflatten(best_f, f_blocks);
  out.best_val = stopper.best();
  return out;
}

TrainOutput train_joint(const CycleSeries& train_cycles,
                        const CycleSeries& val_cycles, const RunConfig& cfg) {
  std::vector<CycleSeries> train_pool{train_cycles};
  std::vector<CycleSeries> val_pool;
  if (!val_cycles.empty()) val_pool.push_back(val_cycles);
  return pooled_train(train_pool, val_pool, cfg, nullptr, 0);
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out =
      "epoch,train_total,rec,lin,pred,soc,val_total,rho,lr_koopman,lr_fno,"
      "clip_rescaled,clip_fallback,clip_failed\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch);
    out += ',';
    out += format_double(r.train_total);
    out += ',';
    out += format_double(r.rec);
    out += ',';
    out += format_double(r.lin);
    out += ',';
    out += format_double(r.pred);
    out += ',';
    out += format_double(r.soc);
    out += ',';
    out += format_double(r.val_total);
    out += ',';
    out += format_double(r.rho);
    out += ',';
    out += format_double(r.lr_koopman);
    out += ',';
    out += format_double(r.lr_fno);
    out += ',';
    out += std::to_string(r.clip_rescaled);
    out += ',';
    out += std::to_string(r.clip_fallback);
    out += ',';
    out += std::to_string(r.clip_failed);
    out += '\n';
  }
  return out;
}

}  // namespace kfno
