/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "kfno/kfno.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/pipeline.hpp"

struct kfno_config {
  kfno::RunConfig cfg;
};

struct kfno_dataset {
  std::vector<kfno::LoadedBattery> batteries;
  kfno::Index n_c = 0;
};

struct kfno_model {
  kfno::TrainedBundle bundle;
};

namespace {

thread_local std::string t_last_error;

int fail(int code, const std::string& msg) {
  t_last_error = msg;
  return code;
}

template <typename T>
T* fail_null(int code, const std::string& msg) {
  (void)code;
  t_last_error = msg;
  return nullptr;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs `fn` (returning std::string) under the error barrier; returns a
// malloc'd copy or NULL with the thread-local message set.
template <typename Fn>
char* string_call(Fn&& fn) {
  try {
    std::string s = fn();
    char* out = dup_string(s);
    if (out == nullptr) {
      t_last_error = "out of memory";
      return nullptr;
    }
    return out;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return nullptr;
  }
}

std::string spectrum_csv(const kfno::SpectrumResult& spec) {
  std::string out = "# rho=" + kfno::format_double(spec.rho) + "\n";
  out += "index,re,im,modulus\n";
  for (kfno::Index i = 0; i < spec.values.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += kfno::format_double(spec.values(i).real());
    out += ',';
    out += kfno::format_double(spec.values(i).imag());
    out += ',';
    out += kfno::format_double(std::abs(spec.values(i)));
    out += '\n';
  }
  return out;
}

void write_file_or_throw(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  kfno::require(f.good(), "cannot open file for writing: " + path);
  f << text;
  kfno::require(f.good(), "write failed: " + path);
}

// File tag for a support fraction: 0.01 -> "1pct", 0.125 -> "12.5pct".
std::string k_tag(double k) {
  double pct = k * 100.0;
  std::string s = kfno::format_double(pct);
  return s + "pct";
}

}  // namespace

extern "C" {

const char* kfno_version(void) { return "1.0.0"; }

const char* kfno_last_error(void) { return t_last_error.c_str(); }

void kfno_string_free(char* s) { std::free(s); }

/* --- configuration -------------------------------------------------------- */

kfno_config_t* kfno_config_create(void) {
  try {
    return new kfno_config();
  } catch (const std::exception& e) {
    return fail_null<kfno_config_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

kfno_config_t* kfno_config_from_json(const char* json_text) {
  if (json_text == nullptr)
    return fail_null<kfno_config_t>(KFNO_ERR_INVALID_ARGUMENT,
                                    "json_text is NULL");
  try {
    auto* c = new kfno_config();
    try {
      c->cfg = kfno::config_from_json_text(json_text);
    } catch (...) {
      delete c;
      throw;
    }
    return c;
  } catch (const std::exception& e) {
    return fail_null<kfno_config_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

kfno_config_t* kfno_config_from_file(const char* path) {
  if (path == nullptr)
    return fail_null<kfno_config_t>(KFNO_ERR_INVALID_ARGUMENT, "path is NULL");
  try {
    auto* c = new kfno_config();
    try {
      c->cfg = kfno::config_from_json_file(path);
    } catch (...) {
      delete c;
      throw;
    }
    return c;
  } catch (const std::exception& e) {
    return fail_null<kfno_config_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

int kfno_config_set_json(kfno_config_t* cfg, const char* json_text) {
  if (cfg == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  if (json_text == nullptr)
    return fail(KFNO_ERR_INVALID_ARGUMENT, "json_text is NULL");
  try {
    // Apply onto a copy so a rejected document leaves cfg untouched.
    kfno::RunConfig next = cfg->cfg;
    kfno::config_apply_json_text(next, json_text);
    cfg->cfg = next;
    return KFNO_OK;
  } catch (const std::exception& e) {
    return fail(KFNO_ERR_RUNTIME, e.what());
  }
}

char* kfno_config_to_json(const kfno_config_t* cfg) {
  if (cfg == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  return string_call([&] { return kfno::config_to_json(cfg->cfg); });
}

char* kfno_config_hash(const kfno_config_t* cfg) {
  if (cfg == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  return string_call([&] { return kfno::config_hash(cfg->cfg); });
}

void kfno_config_destroy(kfno_config_t* cfg) { delete cfg; }

/* --- synthetic data --------------------------------------------------------- */

int kfno_synth_battery(const kfno_config_t* cfg, const char* out_dir) {
  if (cfg == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  if (out_dir == nullptr)
    return fail(KFNO_ERR_INVALID_ARGUMENT, "out_dir is NULL");
  try {
    kfno::SynthBattery b = kfno::generate_battery(cfg->cfg.synth);
    kfno::write_battery_files(b, out_dir);
    return KFNO_OK;
  } catch (const std::exception& e) {
    return fail(KFNO_ERR_RUNTIME, e.what());
  }
}

int kfno_synth_fleet(const kfno_config_t* cfg, const char* shift,
                     const char* out_dir) {
  if (cfg == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  if (shift == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "shift is NULL");
  if (out_dir == nullptr)
    return fail(KFNO_ERR_INVALID_ARGUMENT, "out_dir is NULL");
  try {
    kfno::FleetConfig fc;
    fc.base = cfg->cfg.synth;
    const std::string kind = shift;
    if (kind == "temperature") {
      fc.shift = kfno::FleetShift::kTemperature;
    } else if (kind == "charge-rate") {
      fc.shift = kfno::FleetShift::kChargeRate;
    } else if (kind == "chemistry") {
      fc.shift = kfno::FleetShift::kChemistry;
    } else {
      return fail(KFNO_ERR_INVALID_ARGUMENT,
                  "unknown fleet shift '" + kind +
                      "' (expected temperature, charge-rate, or chemistry)");
    }
    for (const kfno::SynthBattery& b : kfno::generate_fleet(fc))
      kfno::write_battery_files(b, out_dir);
    return KFNO_OK;
  } catch (const std::exception& e) {
    return fail(KFNO_ERR_RUNTIME, e.what());
  }
}

/* --- datasets --------------------------------------------------------------- */

kfno_dataset_t* kfno_dataset_load(const char* data_path, int n_c) {
  if (data_path == nullptr)
    return fail_null<kfno_dataset_t>(KFNO_ERR_INVALID_ARGUMENT,
                                     "data_path is NULL");
  if (n_c < 2)
    return fail_null<kfno_dataset_t>(KFNO_ERR_INVALID_ARGUMENT,
                                     "n_c must be at least 2");
  try {
    auto* ds = new kfno_dataset();
    try {
      ds->batteries = kfno::load_batteries(data_path, n_c);
      ds->n_c = n_c;
    } catch (...) {
      delete ds;
      throw;
    }
    return ds;
  } catch (const std::exception& e) {
    return fail_null<kfno_dataset_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

size_t kfno_dataset_battery_count(const kfno_dataset_t* ds) {
  return ds == nullptr ? 0 : ds->batteries.size();
}

char* kfno_dataset_battery_id(const kfno_dataset_t* ds, size_t index) {
  if (ds == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "ds is NULL");
  if (index >= ds->batteries.size())
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT,
                           "battery index out of range");
  return string_call([&] { return ds->batteries[index].meta.battery_id; });
}

void kfno_dataset_destroy(kfno_dataset_t* ds) { delete ds; }

/* --- training --------------------------------------------------------------- */

kfno_model_t* kfno_train(const kfno_config_t* cfg, const kfno_dataset_t* ds) {
  if (cfg == nullptr)
    return fail_null<kfno_model_t>(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  if (ds == nullptr)
    return fail_null<kfno_model_t>(KFNO_ERR_INVALID_ARGUMENT, "ds is NULL");
  try {
    auto* m = new kfno_model();
    try {
      m->bundle = kfno::run_training(ds->batteries, cfg->cfg);
    } catch (...) {
      delete m;
      throw;
    }
    return m;
  } catch (const std::exception& e) {
    return fail_null<kfno_model_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

int kfno_model_save(const kfno_model_t* m, const char* path) {
  if (m == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  if (path == nullptr) return fail(KFNO_ERR_INVALID_ARGUMENT, "path is NULL");
  try {
    kfno::save_checkpoint(m->bundle, path);
    return KFNO_OK;
  } catch (const std::exception& e) {
    return fail(KFNO_ERR_IO, e.what());
  }
}

kfno_model_t* kfno_model_load(const char* path) {
  if (path == nullptr)
    return fail_null<kfno_model_t>(KFNO_ERR_INVALID_ARGUMENT, "path is NULL");
  try {
    auto* m = new kfno_model();
    try {
      m->bundle = kfno::load_checkpoint(path);
    } catch (...) {
      delete m;
      throw;
    }
    return m;
  } catch (const std::exception& e) {
    return fail_null<kfno_model_t>(KFNO_ERR_RUNTIME, e.what());
  }
}

char* kfno_model_config_json(const kfno_model_t* m) {
  if (m == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  return string_call([&] { return kfno::config_to_json(m->bundle.cfg); });
}

char* kfno_model_history_csv(const kfno_model_t* m) {
  if (m == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  return string_call([&]() -> std::string {
    // Checkpoints do not carry the training log, so a loaded model reports an
    // empty string rather than a bare CSV header.
    if (m->bundle.history.empty()) return std::string();
    return kfno::history_to_csv(m->bundle.history);
  });
}

char* kfno_model_spectrum_csv(const kfno_model_t* m) {
  if (m == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  return string_call(
      [&] { return spectrum_csv(kfno::spectrum(m->bundle.koopman.k_op)); });
}

void kfno_model_destroy(kfno_model_t* m) { delete m; }

/* --- evaluation -------------------------------------------------------------- */

char* kfno_evaluate(const kfno_model_t* m, const kfno_dataset_t* ds, int rollout,
                    char** predictions_csv_out) {
  if (predictions_csv_out != nullptr) *predictions_csv_out = nullptr;
  if (m == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  if (ds == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "ds is NULL");
  try {
    kfno::EvalOutput out =
        kfno::evaluate_contiguous(m->bundle, ds->batteries, rollout != 0);
    if (predictions_csv_out != nullptr) {
      *predictions_csv_out = dup_string(kfno::predictions_to_csv(out.predictions));
      kfno::require(*predictions_csv_out != nullptr, "out of memory");
    }
    char* metrics = dup_string(kfno::metrics_to_json(out.metrics));
    if (metrics == nullptr) {
      if (predictions_csv_out != nullptr) {
        std::free(*predictions_csv_out);
        *predictions_csv_out = nullptr;
      }
      t_last_error = "out of memory";
      return nullptr;
    }
    return metrics;
  } catch (const std::exception& e) {
    return fail_null<char>(KFNO_ERR_RUNTIME, e.what());
  }
}

char* kfno_predict(const kfno_model_t* m, const kfno_dataset_t* ds, int rollout) {
  if (m == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "model is NULL");
  if (ds == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "ds is NULL");
  return string_call([&] {
    std::vector<kfno::CyclePrediction> all;
    for (const kfno::LoadedBattery& b : ds->batteries) {
      std::vector<kfno::Cycle> cycles;
      cycles.reserve(b.cycles.size());
      for (const kfno::ResampledCycle& rc : b.cycles)
        cycles.push_back(kfno::apply_scaler(rc, m->bundle.scaler));
      kfno::EvalOutput out = kfno::evaluate(
          m->bundle.koopman, m->bundle.fno, m->bundle.scaler, cycles,
          /*context=*/nullptr, rollout != 0, m->bundle.cfg.coupled,
          b.meta.nominal_capacity_ah);
      all.insert(all.end(), std::make_move_iterator(out.predictions.begin()),
                 std::make_move_iterator(out.predictions.end()));
    }
    return kfno::predictions_to_csv(all);
  });
}

char* kfno_run_ood(const kfno_config_t* cfg, const kfno_dataset_t* ds,
                   const double* k_list, size_t k_count, const char* out_dir) {
  if (cfg == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "cfg is NULL");
  if (ds == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "ds is NULL");
  if (k_list == nullptr && k_count > 0)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "k_list is NULL");
  if (out_dir == nullptr)
    return fail_null<char>(KFNO_ERR_INVALID_ARGUMENT, "out_dir is NULL");
  return string_call([&] {
    std::vector<double> ks(k_list, k_list + k_count);
    if (ks.empty()) ks.push_back(0.0);
    kfno::OodRun run = kfno::run_ood(ds->batteries, cfg->cfg, ks);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_file_or_throw((dir / "base_checkpoint.json").string(),
                        kfno::checkpoint_to_json(run.base));
    write_file_or_throw((dir / "base_history.csv").string(),
                        kfno::history_to_csv(run.base.history));

    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    for (const kfno::OodPoint& p : run.points) {
      const std::string tag = k_tag(p.k_shot);
      write_file_or_throw((dir / ("metrics_k" + tag + ".json")).string(),
                          kfno::metrics_to_json(p.metrics));
      write_file_or_throw((dir / ("predictions_k" + tag + ".csv")).string(),
                          kfno::predictions_to_csv(p.predictions));
      write_file_or_throw((dir / ("spectrum_k" + tag + ".csv")).string(),
                          spectrum_csv(p.spec));
      all.push_back(nlohmann::ordered_json::parse(kfno::metrics_to_json(p.metrics)));
    }
    return all.dump(2) + "\n";
  });
}

} /* extern "C" */
