/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_CONFIG_HPP
#define KFNO_CORE_CONFIG_HPP

#include "core/fno.hpp"
#include "core/koopman.hpp"
#include "core/losses.hpp"
#include "core/synth.hpp"

namespace kfno {

enum class Scenario { kContiguous, kTempOod, kCrateOod, kChemOod };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct TrainSection {
  int batch_size_coupled = 6;
  int batch_size_decoupled = 4;
  int max_epochs = 150;
  int patience = 30;
  int lr_step_epochs = 30;
  double lr_gamma = 0.5;
  double val_fraction = 0.1;
  int adapt_epochs = 30;  // budget for few-shot continuation
};

struct SplitSection {
  Scenario scenario = Scenario::kContiguous;
  double test_fraction = 0.25;
  double k_shot = 0.0;  // fraction of the held-out battery used as support
  std::vector<std::string> train_batteries;  // optional explicit OOD lists
  std::string test_battery;
};

// The resolved run configuration: everything a training or evaluation run
// needs, serialisable to/from JSON with unknown keys rejected at every level.
struct RunConfig {
  std::uint64_t seed = 42;
  Index n_c = 90;          // per-cycle grid length (presets: 906, 90, 45, 15)
  bool coupled = true;     // SoC head consumes the capacity forecast
  double rho_max = 1.0;

  KoopmanConfig koopman;
  double koopman_lr = 1e-4;

  FnoConfig fno;
  double fno_lr_coupled = 5e-4;
  double fno_lr_decoupled = 5e-3;
  double fno_weight_decay = 1e-4;

  LossWeights loss_weights;
  double huber_delta = 1.0;

  TrainSection train;
  SplitSection split;
  SynthConfig synth;

  int batch_size() const {
    return coupled ? train.batch_size_coupled : train.batch_size_decoupled;
  }
  double fno_lr() const { return coupled ? fno_lr_coupled : fno_lr_decoupled; }
};

// Canonical JSON form (stable key order) and its FNV-1a fingerprint.
std::string config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Parses a (possibly partial) JSON document over the defaults; unknown keys,
// wrong types, and out-of-range values raise Error naming the key.
RunConfig config_from_json_text(const std::string& json_text);
RunConfig config_from_json_file(const std::string& path);

// Applies a (possibly partial) JSON document onto an existing config and
// re-validates, with the same strictness as config_from_json_text.
void config_apply_json_text(RunConfig& cfg, const std::string& json_text);

// Validates cross-field constraints (grid length vs modes, fractions, ...).
void validate_config(const RunConfig& cfg);

}  // namespace kfno

#endif  // KFNO_CORE_CONFIG_HPP
