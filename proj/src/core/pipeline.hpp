/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_PIPELINE_HPP
#define KFNO_CORE_PIPELINE_HPP

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/fno.hpp"
#include "core/koopman.hpp"
#include "core/losses.hpp"
#include "core/optim.hpp"

namespace kfno {

// --- joint objective --------------------------------------------------------

// One consecutive-cycle training example, already scaled.
struct PairSample {
  double q_cur = 0.0;        // scaled capacity of cycle c
  double q_next = 0.0;       // scaled capacity of cycle c+1
  Vector u_bar_cur;          // summary of cycle c (drives the latent update)
  const Matrix* grid_next = nullptr;  // N_c x 3 sensors of cycle c+1
  const Vector* soc_next = nullptr;   // N_c scaled SoC target of cycle c+1
};

// Loss of one weighted batch. In coupled mode the SoC head consumes the
// capacity forecast (so its error backpropagates into the capacity pathway);
// in decoupled mode it consumes the measured next capacity and the two
// pathways only share the loss sum.
LossBreakdown joint_loss(const KoopmanModel& koop, const FnoModel& fno,
                         const std::vector<PairSample>& batch,
                         const std::vector<double>& weights,
                         const LossWeights& lw, double huber_delta, bool coupled);

// Same traversal with reverse-mode accumulation into the gradient clones.
LossBreakdown joint_loss_grad(const KoopmanModel& koop, const FnoModel& fno,
                              const std::vector<PairSample>& batch,
                              const std::vector<double>& weights,
                              const LossWeights& lw, double huber_delta,
                              bool coupled, KoopmanModel& koop_grads,
                              FnoModel& fno_grads);

// --- training ---------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double train_total = 0.0, rec = 0.0, lin = 0.0, pred = 0.0, soc = 0.0;
  double val_total = 0.0;
  double rho = 0.0;            // spectral radius after the epoch
  double lr_koopman = 0.0, lr_fno = 0.0;
  int clip_rescaled = 0;       // eigenvalue clips this epoch
  int clip_fallback = 0;       // whole-matrix rescales this epoch
  int clip_failed = 0;         // decomposition failures (operator passed through)
  std::vector<double> battery_weight_sums;  // per battery, gradient accounting
};

struct TrainOutput {
  KoopmanModel koopman;
  FnoModel fno;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val = 0.0;
};

// Cycles of one battery, scaled, in cycle order.
using CycleSeries = std::vector<Cycle>;

// Joint optimisation of both pathways over pooled batteries. Risk weighting:
// every consecutive pair of battery b carries weight 1/(B * P_b), and each
// mini-batch normalises the weights of its members, so every battery
// contributes equally per epoch regardless of its cycle count and a
// single-battery pool reduces exactly to plain mini-batch means.
// Early stopping tracks the pooled validation loss (strict improvement,
// cfg.train.patience), and the best-epoch parameters are restored at the end.
// When `initial` is non-null, optimisation continues from those weights
// (few-shot adaptation) for at most `max_epochs_override` epochs.
TrainOutput pooled_train(const std::vector<CycleSeries>& train_sets,
                         const std::vector<CycleSeries>& val_sets,
                         const RunConfig& cfg,
                         const TrainOutput* initial = nullptr,
                         int max_epochs_override = 0);

// Single-battery convenience wrapper; same code path as a one-battery pool.
TrainOutput train_joint(const CycleSeries& train, const CycleSeries& val,
                        const RunConfig& cfg);

std::string history_to_csv(const std::vector<EpochRecord>& history);

// --- prediction and metrics -------------------------------------------------

struct CyclePrediction {
  std::string battery_id;
  long cycle_index = 0;
  double qmax_true_ah = 0.0;
  double qmax_pred_ah = 0.0;
  double soh_pred_pct = 0.0;
  Vector soc_true_pct;      // physical units
  Vector soc_pred_raw_pct;  // unclamped
  Vector soc_pred_pct;      // clamped to [0, 100]
  Vector t_s;
};

// Forecast one cycle from its predecessor's measured capacity and summary,
// then read the SoC trajectory off the sensor grid (plus the forecast in
// coupled mode, the measured capacity otherwise).
CyclePrediction predict_cycle(const KoopmanModel& koop, const FnoModel& fno,
                              const ScalerState& scaler, const Cycle& cycle,
                              double prev_q_scaled, const Vector& prev_u_bar,
                              bool coupled, double q_nominal_ah);

struct Metrics {
  std::string scenario = "contiguous";
  double k_shot = 0.0;
  double soc_rmse_pct = 0.0;
  double soc_mae_pct = 0.0;
  double soc_rmse_raw_pct = 0.0;
  double soc_mae_raw_pct = 0.0;
  double qmax_rmse_ah = 0.0;
  double qmax_mae_ah = 0.0;
  double time_s = 0.0;  // wall time spent in model forwards
};

struct EvalOutput {
  Metrics metrics;
  std::vector<CyclePrediction> predictions;
};

// Walks an ordered cycle sequence and scores every prediction against the
// measured targets (errors in physical units). `context` optionally supplies
// the cycle preceding eval.front(); without it the first cycle serves as
// context only. One-step mode feeds each measured predecessor capacity;
// rollout mode feeds the model its own latent trajectory.
EvalOutput evaluate(const KoopmanModel& koop, const FnoModel& fno,
                    const ScalerState& scaler, const std::vector<Cycle>& eval_cycles,
                    const Cycle* context, bool rollout, bool coupled,
                    double q_nominal_ah);

std::string metrics_to_json(const Metrics& m);
std::string predictions_to_csv(const std::vector<CyclePrediction>& preds);

// --- checkpointing ----------------------------------------------------------

struct TrainedBundle {
  RunConfig cfg;
  ScalerState scaler;
  KoopmanModel koopman;
  FnoModel fno;
  std::vector<EpochRecord> history;
};

// Versioned JSON container holding the resolved config (with fingerprint),
// scaler state, and every parameter block by name. Loading rejects version,
// fingerprint, or shape mismatches with a descriptive Error.
std::string checkpoint_to_json(const TrainedBundle& bundle);
TrainedBundle checkpoint_from_json(const std::string& json_text);
void save_checkpoint(const TrainedBundle& bundle, const std::string& path);
TrainedBundle load_checkpoint(const std::string& path);

// --- scenario orchestration ---------------------------------------------------

struct LoadedBattery {
  BatteryMeta meta;
  std::vector<ResampledCycle> cycles;
};

// Loads every <id>_cycles.csv / <id>_meta.json pair in a directory (or the
// single battery whose cycle CSV path is given), resampled to n_c.
std::vector<LoadedBattery> load_batteries(const std::string& data_path, Index n_c);

// Scenario-resolved battery roles.
struct OodRoles {
  std::vector<std::size_t> train;  // indices into the battery list
  std::size_t test = 0;
};

// Resolves which batteries are sources and which is held out, honouring the
// explicit lists in cfg.split when given, defaulting to "last battery held
// out". Unknown battery ids raise Error.
OodRoles resolve_ood_roles(const std::vector<LoadedBattery>& batteries,
                           const SplitSection& split);

// Contiguous-scenario training: per-battery contiguous test split, evenly
// spaced interior validation cycles held out of each training block (so the
// optimisation pool spans the block's full degradation range), scaler fitted
// on the training blocks.
TrainedBundle run_training(const std::vector<LoadedBattery>& batteries,
                           const RunConfig& cfg);

// Evaluation of a contiguous-scenario checkpoint on the matching test split.
EvalOutput evaluate_contiguous(const TrainedBundle& bundle,
                               const std::vector<LoadedBattery>& batteries,
                               bool rollout);

struct OodPoint {
  double k_shot = 0.0;
  Metrics metrics;
  SpectrumResult spec;
  std::vector<CyclePrediction> predictions;
};

// Full transfer protocol: pooled training on the source batteries, then for
// every k in k_list adapt a copy on the earliest ceil(k*N) cycles of the
// held-out battery (bounded continuation at the same learning rates) and
// score the remaining cycles one-step. k = 0 evaluates zero-shot.
struct OodRun {
  TrainedBundle base;
  std::vector<OodPoint> points;
};

OodRun run_ood(const std::vector<LoadedBattery>& batteries, const RunConfig& cfg,
               const std::vector<double>& k_list);

// Adaptation + evaluation against an existing base checkpoint.
std::vector<OodPoint> run_ood_from_base(const TrainedBundle& base,
                                        const std::vector<LoadedBattery>& batteries,
                                        const std::vector<double>& k_list);

}  // namespace kfno

#endif  // KFNO_CORE_PIPELINE_HPP
