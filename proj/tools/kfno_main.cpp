/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Command-line front end for the KFNO battery state estimator. Talks to the
 * library exclusively through the C API in kfno/kfno.h.
 */

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kfno/kfno.h"

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void die(const std::string& context) {
  std::cerr << "error: " << context;
  const char* detail = kfno_last_error();
  if (detail != nullptr && detail[0] != '\0') std::cerr << ": " << detail;
  std::cerr << "\n";
  std::exit(1);
}

// Owning wrapper for strings returned by the library.
struct ApiString {
  char* ptr = nullptr;
  ~ApiString() { kfno_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : ptr; }
};

struct ConfigHandle {
  kfno_config_t* ptr = nullptr;
  ~ConfigHandle() { kfno_config_destroy(ptr); }
};

struct DatasetHandle {
  kfno_dataset_t* ptr = nullptr;
  ~DatasetHandle() { kfno_dataset_destroy(ptr); }
};

struct ModelHandle {
  kfno_model_t* ptr = nullptr;
  ~ModelHandle() { kfno_model_destroy(ptr); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f.good()) die("cannot open " + path + " for writing");
  f << text;
  if (!f.good()) die("write failed: " + path);
}

// Flags shared by the subcommands that build a run configuration. Only flags
// the user actually passed are overlaid onto the config file / defaults.
struct ConfigFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  long nc = 0;
  bool coupled = false;
  bool decoupled = false;
  double rho_max = 0.0;
  std::string scenario;
  double k_shot_pct = 0.0;
  std::string test_battery;
  std::vector<std::string> train_batteries;
  long max_epochs = 0;
  long synth_cycles = 0;
  std::uint64_t synth_seed = 0;
  bool print_config = false;

  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_nc = nullptr;
  CLI::Option* opt_coupled = nullptr;
  CLI::Option* opt_decoupled = nullptr;
  CLI::Option* opt_rho = nullptr;
  CLI::Option* opt_scenario = nullptr;
  CLI::Option* opt_kshot = nullptr;
  CLI::Option* opt_test_battery = nullptr;
  CLI::Option* opt_train_batteries = nullptr;
  CLI::Option* opt_max_epochs = nullptr;
  CLI::Option* opt_synth_cycles = nullptr;
  CLI::Option* opt_synth_seed = nullptr;
};

void add_config_flags(CLI::App* cmd, ConfigFlags* f) {
  cmd->add_option("--config", f->config_path,
                  "JSON config file applied over the defaults")
      ->check(CLI::ExistingFile);
  f->opt_seed = cmd->add_option("--seed", f->seed, "Global random seed");
  f->opt_nc = cmd->add_option("--nc", f->nc, "Per-cycle grid length");
  f->opt_coupled = cmd->add_flag(
      "--coupled", f->coupled, "SoC head consumes the capacity forecast");
  f->opt_decoupled = cmd->add_flag(
      "--decoupled", f->decoupled, "SoC head consumes the measured capacity");
  f->opt_rho = cmd->add_option("--rho-max", f->rho_max,
                               "Spectral radius bound for the latent operator");
  f->opt_scenario = cmd->add_option(
      "--scenario", f->scenario,
      "Evaluation protocol: contiguous, temp-ood, crate-ood, or chem-ood");
  f->opt_kshot = cmd->add_option(
      "--k-shot", f->k_shot_pct,
      "Support fraction of the held-out battery, in percent");
  f->opt_test_battery = cmd->add_option("--test-battery", f->test_battery,
                                        "Battery id held out for transfer");
  f->opt_train_batteries = cmd->add_option(
      "--train-battery", f->train_batteries,
      "Source battery id (repeatable; default: all but the held-out one)");
  f->opt_max_epochs =
      cmd->add_option("--max-epochs", f->max_epochs, "Training epoch budget");
  f->opt_synth_cycles = cmd->add_option("--cycles", f->synth_cycles,
                                        "Cycles per synthetic battery");
  f->opt_synth_seed = cmd->add_option("--synth-seed", f->synth_seed,
                                      "Seed for the data generator only");
  cmd->add_flag("--print-config", f->print_config,
                "Print the resolved config as JSON and exit");
}

kfno_config_t* build_config(const ConfigFlags& f) {
  kfno_config_t* cfg = f.config_path.empty()
                           ? kfno_config_create()
                           : kfno_config_from_file(f.config_path.c_str());
  if (cfg == nullptr) die("loading config");

  ordered_json overlay;
  if (f.opt_seed->count() > 0) overlay["seed"] = f.seed;
  if (f.opt_nc->count() > 0) overlay["nc"] = f.nc;
  if (f.opt_coupled->count() > 0 && f.opt_decoupled->count() > 0) {
    kfno_config_destroy(cfg);
    std::cerr << "error: --coupled and --decoupled are mutually exclusive\n";
    std::exit(1);
  }
  if (f.opt_coupled->count() > 0) overlay["coupled"] = true;
  if (f.opt_decoupled->count() > 0) overlay["coupled"] = false;
  if (f.opt_rho->count() > 0) overlay["rho_max"] = f.rho_max;
  if (f.opt_scenario->count() > 0) overlay["split"]["scenario"] = f.scenario;
  if (f.opt_kshot->count() > 0)
    overlay["split"]["k_shot"] = f.k_shot_pct / 100.0;
  if (f.opt_test_battery->count() > 0)
    overlay["split"]["test_battery"] = f.test_battery;
  if (f.opt_train_batteries->count() > 0)
    overlay["split"]["train_batteries"] = f.train_batteries;
  if (f.opt_max_epochs->count() > 0) overlay["train"]["max_epochs"] = f.max_epochs;
  if (f.opt_synth_cycles->count() > 0)
    overlay["synth"]["n_cycles"] = f.synth_cycles;
  if (f.opt_synth_seed->count() > 0) overlay["synth"]["seed"] = f.synth_seed;

  if (!overlay.empty() &&
      kfno_config_set_json(cfg, overlay.dump().c_str()) != KFNO_OK) {
    std::string why = kfno_last_error();
    kfno_config_destroy(cfg);
    std::cerr << "error: applying command-line overrides: " << why << "\n";
    std::exit(1);
  }
  if (f.print_config) {
    ApiString s{kfno_config_to_json(cfg)};
    if (s.ptr == nullptr) die("rendering config");
    std::cout << s.str();
    kfno_config_destroy(cfg);
    std::exit(0);
  }
  return cfg;
}

// Reads a field out of the resolved config (the CLI's view of values it did
// not set itself, e.g. the grid length for dataset loading).
ordered_json config_view(kfno_config_t* cfg) {
  ApiString s{kfno_config_to_json(cfg)};
  if (s.ptr == nullptr) die("rendering config");
  return ordered_json::parse(s.str());
}

int run_synth(const ConfigFlags& flags, const std::string& out_dir,
              const std::string& fleet_shift) {
  ConfigHandle cfg{build_config(flags)};
  fs::create_directories(out_dir);
  if (fleet_shift.empty()) {
    if (kfno_synth_battery(cfg.ptr, out_dir.c_str()) != KFNO_OK)
      die("generating battery");
    ordered_json view = config_view(cfg.ptr);
    std::cout << "wrote battery " << view["synth"]["battery_id"].get<std::string>()
              << " (" << view["synth"]["n_cycles"].get<long>() << " cycles) to "
              << out_dir << "\n";
  } else {
    if (kfno_synth_fleet(cfg.ptr, fleet_shift.c_str(), out_dir.c_str()) != KFNO_OK)
      die("generating fleet");
    std::cout << "wrote 3-battery fleet (shift: " << fleet_shift << ") to "
              << out_dir << "\n";
  }
  return 0;
}

int run_train(const ConfigFlags& flags, const std::string& data_path,
              const std::string& out_dir, std::vector<double> k_pcts) {
  ConfigHandle cfg{build_config(flags)};
  ordered_json view = config_view(cfg.ptr);
  const int nc = view["nc"].get<int>();
  const std::string scenario = view["split"]["scenario"].get<std::string>();

  DatasetHandle ds{kfno_dataset_load(data_path.c_str(), nc)};
  if (ds.ptr == nullptr) die("loading data from " + data_path);
  fs::create_directories(out_dir);
  {
    ApiString cfg_json{kfno_config_to_json(cfg.ptr)};
    write_file((fs::path(out_dir) / "config.json").string(), cfg_json.str());
  }

  if (scenario == "contiguous") {
    ModelHandle model{kfno_train(cfg.ptr, ds.ptr)};
    if (model.ptr == nullptr) die("training");
    const std::string ckpt = (fs::path(out_dir) / "checkpoint.json").string();
    if (kfno_model_save(model.ptr, ckpt.c_str()) != KFNO_OK)
      die("saving checkpoint");
    ApiString history{kfno_model_history_csv(model.ptr)};
    write_file((fs::path(out_dir) / "history.csv").string(), history.str());
    ApiString spec{kfno_model_spectrum_csv(model.ptr)};
    if (spec.ptr == nullptr) die("computing spectrum");
    write_file((fs::path(out_dir) / "spectrum.csv").string(), spec.str());

    char* preds_raw = nullptr;
    ApiString metrics{kfno_evaluate(model.ptr, ds.ptr, /*rollout=*/0, &preds_raw)};
    ApiString preds{preds_raw};
    if (metrics.ptr == nullptr) die("evaluating held-out block");
    write_file((fs::path(out_dir) / "metrics.json").string(), metrics.str());
    write_file((fs::path(out_dir) / "predictions.csv").string(), preds.str());
    std::cout << metrics.str();
  } else {
    if (k_pcts.empty()) k_pcts = {0.0, 1.0, 5.0, 10.0};
    std::vector<double> ks;
    ks.reserve(k_pcts.size());
    for (double pct : k_pcts) ks.push_back(pct / 100.0);
    ApiString summary{kfno_run_ood(cfg.ptr, ds.ptr, ks.data(), ks.size(),
                                   out_dir.c_str())};
    if (summary.ptr == nullptr) die("transfer run");
    write_file((fs::path(out_dir) / "metrics_all.json").string(), summary.str());
    std::cout << summary.str();
  }
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data_path,
             const std::string& out_dir, bool rollout) {
  ModelHandle model{kfno_model_load(ckpt.c_str())};
  if (model.ptr == nullptr) die("loading checkpoint " + ckpt);
  ApiString cfg_json{kfno_model_config_json(model.ptr)};
  if (cfg_json.ptr == nullptr) die("reading checkpoint config");
  const int nc = ordered_json::parse(cfg_json.str())["nc"].get<int>();

  DatasetHandle ds{kfno_dataset_load(data_path.c_str(), nc)};
  if (ds.ptr == nullptr) die("loading data from " + data_path);

  char* preds_raw = nullptr;
  ApiString metrics{kfno_evaluate(model.ptr, ds.ptr, rollout ? 1 : 0, &preds_raw)};
  ApiString preds{preds_raw};
  if (metrics.ptr == nullptr) die("evaluating");
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "metrics.json").string(), metrics.str());
    write_file((fs::path(out_dir) / "predictions.csv").string(), preds.str());
  }
  std::cout << metrics.str();
  return 0;
}

int run_predict(const std::string& ckpt, const std::string& data_path,
                const std::string& out_file, bool rollout) {
  ModelHandle model{kfno_model_load(ckpt.c_str())};
  if (model.ptr == nullptr) die("loading checkpoint " + ckpt);
  ApiString cfg_json{kfno_model_config_json(model.ptr)};
  if (cfg_json.ptr == nullptr) die("reading checkpoint config");
  const int nc = ordered_json::parse(cfg_json.str())["nc"].get<int>();

  DatasetHandle ds{kfno_dataset_load(data_path.c_str(), nc)};
  if (ds.ptr == nullptr) die("loading data from " + data_path);

  ApiString preds{kfno_predict(model.ptr, ds.ptr, rollout ? 1 : 0)};
  if (preds.ptr == nullptr) die("predicting");
  if (out_file.empty() || out_file == "-") {
    std::cout << preds.str();
  } else {
    write_file(out_file, preds.str());
    std::cout << "wrote predictions to " << out_file << "\n";
  }
  return 0;
}

int run_spectrum(const std::string& ckpt, const std::string& out_file) {
  ModelHandle model{kfno_model_load(ckpt.c_str())};
  if (model.ptr == nullptr) die("loading checkpoint " + ckpt);
  ApiString spec{kfno_model_spectrum_csv(model.ptr)};
  if (spec.ptr == nullptr) die("computing spectrum");
  if (out_file.empty() || out_file == "-") {
    std::cout << spec.str();
  } else {
    write_file(out_file, spec.str());
    std::cout << "wrote spectrum to " << out_file << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KFNO battery state estimator: joint per-cycle capacity (SoH) "
               "forecasting and within-cycle SoC estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kfno_version()));

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate synthetic battery data with exact targets");
  ConfigFlags synth_flags;
  add_config_flags(synth, &synth_flags);
  std::string synth_out = "data";
  std::string fleet_shift;
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option(
      "--fleet", fleet_shift,
      "Generate a 3-battery transfer fleet shifted along this axis: "
      "temperature, charge-rate, or chemistry");

  // train
  auto* train = app.add_subcommand(
      "train", "Train a model (contiguous or transfer protocol per config)");
  ConfigFlags train_flags;
  add_config_flags(train, &train_flags);
  std::string train_data, train_out = "run";
  std::vector<double> train_kpcts;
  train->add_option("--data", train_data,
                    "Data directory or single <id>_cycles.csv")
      ->required();
  train->add_option("--out-dir", train_out, "Output directory")->required();
  train->add_option("--k-shots", train_kpcts,
                    "Transfer support sizes in percent (default: 0 1 5 10)");

  // eval
  auto* eval = app.add_subcommand("eval",
                                  "Score a checkpoint on its held-out blocks");
  std::string eval_ckpt, eval_data, eval_out;
  bool eval_rollout = false;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint.json path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "Data directory or cycles CSV")
      ->required();
  eval->add_option("--out-dir", eval_out, "Also write metrics + predictions here");
  eval->add_flag("--rollout", eval_rollout,
                 "Propagate the model's own latent trajectory");

  // predict
  auto* predict = app.add_subcommand(
      "predict", "Predictions over full cycle sequences (first cycle = context)");
  std::string pred_ckpt, pred_data, pred_out;
  bool pred_rollout = false;
  predict->add_option("--checkpoint", pred_ckpt, "checkpoint.json path")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--data", pred_data, "Data directory or cycles CSV")
      ->required();
  predict->add_option("--out", pred_out, "Output CSV path ('-' for stdout)");
  predict->add_flag("--rollout", pred_rollout,
                    "Propagate the model's own latent trajectory");

  // spectrum
  auto* spectrum = app.add_subcommand(
      "spectrum", "Eigenvalues of the latent degradation operator");
  std::string spec_ckpt, spec_out;
  spectrum->add_option("--checkpoint", spec_ckpt, "checkpoint.json path")
      ->required()
      ->check(CLI::ExistingFile);
  spectrum->add_option("--out", spec_out, "Output CSV path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_flags, synth_out, fleet_shift);
    if (train->parsed())
      return run_train(train_flags, train_data, train_out, train_kpcts);
    if (eval->parsed()) return run_eval(eval_ckpt, eval_data, eval_out, eval_rollout);
    if (predict->parsed())
      return run_predict(pred_ckpt, pred_data, pred_out, pred_rollout);
    if (spectrum->parsed()) return run_spectrum(spec_ckpt, spec_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
