/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace kfno {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kContiguous: return "contiguous";
    case Scenario::kTempOod: return "temp-ood";
    case Scenario::kCrateOod: return "crate-ood";
    case Scenario::kChemOod: return "chem-ood";
  }
  throw Error("scenario_name: unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "contiguous") return Scenario::kContiguous;
  if (name == "temp-ood") return Scenario::kTempOod;
  if (name == "crate-ood") return Scenario::kCrateOod;
  if (name == "chem-ood") return Scenario::kChemOod;
  throw Error("unknown scenario '" + name +
              "' (expected contiguous | temp-ood | crate-ood | chem-ood)");
}

namespace {

class SectionReader {
 public:
  SectionReader(const json& j, const std::string& path) : j_(j), path_(path) {
    require(j.is_object(), "config: '" + path + "' must be a JSON object");
  }

  ~SectionReader() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw Error("config: '" + path_ + key + "' has the wrong type");
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) {
        throw Error("config: unknown key '" + path_ + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_widths(const json* j, const std::string& path, std::vector<Index>& out) {
  if (j == nullptr) return;
  require(j->is_array(), "config: '" + path + "' must be an array of widths");
  out.clear();
  for (const auto& v : *j) {
    require(v.is_number_integer() && v.get<long>() > 0,
            "config: '" + path + "' entries must be positive integers");
    out.push_back(v.get<Index>());
  }
  require(!out.empty(), "config: '" + path + "' must not be empty");
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["nc"] = c.n_c;
  j["coupled"] = c.coupled;
  j["rho_max"] = c.rho_max;

  ordered_json k;
  k["latent_dim"] = c.koopman.latent_dim;
  k["encoder_hidden"] = c.koopman.encoder_hidden;
  k["decoder_hidden"] = c.koopman.decoder_hidden;
  k["learning_rate"] = c.koopman_lr;
  j["koopman"] = k;

  ordered_json f;
  f["modes"] = c.fno.modes;
  f["layers"] = c.fno.layer_count;
  f["hidden_channels"] = c.fno.hidden_channels;
  f["lift_channels"] = c.fno.lift_channels;
  f["learning_rate"] = c.fno_lr_coupled;
  f["learning_rate_decoupled"] = c.fno_lr_decoupled;
  f["weight_decay"] = c.fno_weight_decay;
  j["fno"] = f;

  ordered_json l;
  l["rec"] = c.loss_weights.rec;
  l["lin"] = c.loss_weights.lin;
  l["pred"] = c.loss_weights.pred;
  l["soc"] = c.loss_weights.soc;
  l["huber_delta"] = c.huber_delta;
  j["loss"] = l;

  ordered_json t;
  t["batch_size"] = c.train.batch_size_coupled;
  t["batch_size_decoupled"] = c.train.batch_size_decoupled;
  t["max_epochs"] = c.train.max_epochs;
  t["patience"] = c.train.patience;
  t["lr_step_epochs"] = c.train.lr_step_epochs;
  t["lr_gamma"] = c.train.lr_gamma;
  t["val_fraction"] = c.train.val_fraction;
  t["adapt_epochs"] = c.train.adapt_epochs;
  j["train"] = t;

  ordered_json s;
  s["scenario"] = scenario_name(c.split.scenario);
  s["test_fraction"] = c.split.test_fraction;
  s["k_shot"] = c.split.k_shot;
  s["train_batteries"] = c.split.train_batteries;
  s["test_battery"] = c.split.test_battery;
  j["split"] = s;

  ordered_json g;
  g["seed"] = c.synth.seed;
  g["battery_id"] = c.synth.battery_id;
  g["chemistry"] = c.synth.chemistry;
  g["n_cycles"] = c.synth.n_cycles;
  g["nominal_capacity_ah"] = c.synth.nominal_capacity_ah;
  g["fade_rate"] = c.synth.fade_rate;
  g["fade_floor"] = c.synth.fade_floor;
  g["temperature_c"] = c.synth.temperature_c;
  g["charge_c_rate"] = c.synth.charge_c_rate;
  g["discharge_c_rate"] = c.synth.discharge_c_rate;
  g["temperature_sensitivity"] = c.synth.temperature_sensitivity;
  g["voltage_base_v"] = c.synth.voltage_base_v;
  g["voltage_slope_v"] = c.synth.voltage_slope_v;
  g["internal_resistance_ohm"] = c.synth.internal_resistance_ohm;
  g["resistance_temp_coeff"] = c.synth.resistance_temp_coeff;
  g["voltage_temp_coeff_v"] = c.synth.voltage_temp_coeff_v;
  g["cv_switch_soc"] = c.synth.cv_switch_soc;
  g["cv_time_constant_h"] = c.synth.cv_time_constant_h;
  g["noise_voltage_v"] = c.synth.noise_voltage_v;
  g["noise_current_a"] = c.synth.noise_current_a;
  g["noise_temperature_c"] = c.synth.noise_temperature_c;
  g["noise_capacity_ah"] = c.synth.noise_capacity_ah;
  g["samples_per_cycle"] = c.synth.samples_per_cycle;
  j["synth"] = g;

  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a64_hex(config_to_json(cfg));
}

void config_apply_json_text(RunConfig& c, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid JSON: ") + e.what());
  }
  SectionReader top(j, "");
  top.get("seed", c.seed);
  top.get("nc", c.n_c);
  top.get("coupled", c.coupled);
  top.get("rho_max", c.rho_max);

  if (const json* k = top.section("koopman")) {
    SectionReader r(*k, "koopman.");
    r.get("latent_dim", c.koopman.latent_dim);
    read_widths(r.section("encoder_hidden"), "koopman.encoder_hidden",
                c.koopman.encoder_hidden);
    read_widths(r.section("decoder_hidden"), "koopman.decoder_hidden",
                c.koopman.decoder_hidden);
    r.get("learning_rate", c.koopman_lr);
    r.finish();
  }
  if (const json* f = top.section("fno")) {
    SectionReader r(*f, "fno.");
    r.get("modes", c.fno.modes);
    r.get("layers", c.fno.layer_count);
    r.get("hidden_channels", c.fno.hidden_channels);
    r.get("lift_channels", c.fno.lift_channels);
    r.get("learning_rate", c.fno_lr_coupled);
    r.get("learning_rate_decoupled", c.fno_lr_decoupled);
    r.get("weight_decay", c.fno_weight_decay);
    r.finish();
  }
  if (const json* l = top.section("loss")) {
    SectionReader r(*l, "loss.");
    r.get("rec", c.loss_weights.rec);
    r.get("lin", c.loss_weights.lin);
    r.get("pred", c.loss_weights.pred);
    r.get("soc", c.loss_weights.soc);
    r.get("huber_delta", c.huber_delta);
    r.finish();
  }
  if (const json* t = top.section("train")) {
    SectionReader r(*t, "train.");
    r.get("batch_size", c.train.batch_size_coupled);
    r.get("batch_size_decoupled", c.train.batch_size_decoupled);
    r.get("max_epochs", c.train.max_epochs);
    r.get("patience", c.train.patience);
    r.get("lr_step_epochs", c.train.lr_step_epochs);
    r.get("lr_gamma", c.train.lr_gamma);
    r.get("val_fraction", c.train.val_fraction);
    r.get("adapt_epochs", c.train.adapt_epochs);
    r.finish();
  }
  if (const json* s = top.section("split")) {
    SectionReader r(*s, "split.");
    std::string scen = scenario_name(c.split.scenario);
    r.get("scenario", scen);
    c.split.scenario = scenario_from_name(scen);
    r.get("test_fraction", c.split.test_fraction);
    r.get("k_shot", c.split.k_shot);
    r.get("train_batteries", c.split.train_batteries);
    r.get("test_battery", c.split.test_battery);
    r.finish();
  }
  if (const json* g = top.section("synth")) {
    SectionReader r(*g, "synth.");
    r.get("seed", c.synth.seed);
    r.get("battery_id", c.synth.battery_id);
    r.get("chemistry", c.synth.chemistry);
    r.get("n_cycles", c.synth.n_cycles);
    r.get("nominal_capacity_ah", c.synth.nominal_capacity_ah);
    r.get("fade_rate", c.synth.fade_rate);
    r.get("fade_floor", c.synth.fade_floor);
    r.get("temperature_c", c.synth.temperature_c);
    r.get("charge_c_rate", c.synth.charge_c_rate);
    r.get("discharge_c_rate", c.synth.discharge_c_rate);
    r.get("temperature_sensitivity", c.synth.temperature_sensitivity);
    r.get("voltage_base_v", c.synth.voltage_base_v);
    r.get("voltage_slope_v", c.synth.voltage_slope_v);
    r.get("internal_resistance_ohm", c.synth.internal_resistance_ohm);
    r.get("resistance_temp_coeff", c.synth.resistance_temp_coeff);
    r.get("voltage_temp_coeff_v", c.synth.voltage_temp_coeff_v);
    r.get("cv_switch_soc", c.synth.cv_switch_soc);
    r.get("cv_time_constant_h", c.synth.cv_time_constant_h);
    r.get("noise_voltage_v", c.synth.noise_voltage_v);
    r.get("noise_current_a", c.synth.noise_current_a);
    r.get("noise_temperature_c", c.synth.noise_temperature_c);
    r.get("noise_capacity_ah", c.synth.noise_capacity_ah);
    r.get("samples_per_cycle", c.synth.samples_per_cycle);
    r.finish();
  }
  top.finish();
  validate_config(c);
}

RunConfig config_from_json_text(const std::string& json_text) {
  RunConfig c;
  config_apply_json_text(c, json_text);
  return c;
}

RunConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void validate_config(const RunConfig& c) {
  require(c.n_c >= 2, "config: nc must be at least 2");
  require(c.rho_max > 0.0 && c.rho_max <= 1.0,
          "config: rho_max must lie in (0, 1]");
  require(c.koopman.latent_dim > 0, "config: koopman.latent_dim must be positive");
  require(c.fno.modes >= 0, "config: fno.modes must be non-negative");
  require(c.fno.layer_count > 0, "config: fno.layers must be positive");
  require(c.fno.hidden_channels > 0 && c.fno.lift_channels > 0,
          "config: fno channel widths must be positive");
  require(c.koopman_lr > 0.0 && c.fno_lr_coupled > 0.0 && c.fno_lr_decoupled > 0.0,
          "config: learning rates must be positive");
  require(c.fno_weight_decay >= 0.0, "config: weight_decay must be non-negative");
  require(c.huber_delta > 0.0, "config: huber_delta must be positive");
  require(c.train.batch_size_coupled >= 1 && c.train.batch_size_decoupled >= 1,
          "config: batch sizes must be at least 1");
  require(c.train.max_epochs >= 1, "config: max_epochs must be at least 1");
  require(c.train.patience >= 1, "config: patience must be at least 1");
  require(c.train.lr_step_epochs >= 1, "config: lr_step_epochs must be at least 1");
  require(c.train.lr_gamma > 0.0 && c.train.lr_gamma <= 1.0,
          "config: lr_gamma must lie in (0, 1]");
  require(c.train.val_fraction > 0.0 && c.train.val_fraction < 0.5,
          "config: val_fraction must lie in (0, 0.5)");
  require(c.train.adapt_epochs >= 1, "config: adapt_epochs must be at least 1");
  require(c.split.test_fraction > 0.0 && c.split.test_fraction < 1.0,
          "config: split.test_fraction must lie in (0, 1)");
  require(c.split.k_shot >= 0.0 && c.split.k_shot < 1.0,
          "config: split.k_shot must lie in [0, 1)");
  // Grid-length requirement for the spectral layers; named explicitly here
  // because it is the first thing a too-coarse preset trips over.
  require(c.n_c >= 2 * static_cast<Index>(c.fno.modes) + 1,
          "config: nc=" + std::to_string(c.n_c) + " is too short for fno.modes=" +
              std::to_string(c.fno.modes) + "; need nc >= " +
              std::to_string(2 * c.fno.modes + 1) +
              " (reduce fno.modes for coarse grids)");
}

}  // namespace kfno
