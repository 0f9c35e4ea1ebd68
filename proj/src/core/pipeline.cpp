/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/pipeline.hpp"

namespace kfno {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open file for writing: " + path);
  out << text;
  require(out.good(), "write failed: " + path);
}

struct StepForecast {
  double q_hat_scaled = 0.0;
  Vector z;  // latent state after the step (rollout bookkeeping)
};

Metrics metrics_from_predictions(const std::vector<CyclePrediction>& preds) {
  require(!preds.empty(), "metrics: no predictions to score");
  Metrics m;
  double soc_sq = 0.0, soc_abs = 0.0, raw_sq = 0.0, raw_abs = 0.0;
  double q_sq = 0.0, q_abs = 0.0;
  std::size_t soc_n = 0;
  for (const CyclePrediction& p : preds) {
    for (Index t = 0; t < p.soc_true_pct.size(); ++t) {
      const double e = p.soc_pred_pct(t) - p.soc_true_pct(t);
      const double er = p.soc_pred_raw_pct(t) - p.soc_true_pct(t);
      soc_sq += e * e;
      soc_abs += std::abs(e);
      raw_sq += er * er;
      raw_abs += std::abs(er);
      ++soc_n;
    }
    const double qe = p.qmax_pred_ah - p.qmax_true_ah;
    q_sq += qe * qe;
    q_abs += std::abs(qe);
  }
  require(soc_n > 0, "metrics: predictions carry no SoC samples");
  const double n = static_cast<double>(soc_n);
  const double nc = static_cast<double>(preds.size());
  m.soc_rmse_pct = std::sqrt(soc_sq / n);
  m.soc_mae_pct = soc_abs / n;
  m.soc_rmse_raw_pct = std::sqrt(raw_sq / n);
  m.soc_mae_raw_pct = raw_abs / n;
  m.qmax_rmse_ah = std::sqrt(q_sq / nc);
  m.qmax_mae_ah = q_abs / nc;
  return m;
}

CyclePrediction score_cycle(const FnoModel& fno, const ScalerState& scaler,
                            const Cycle& cycle, double q_hat_scaled,
                            bool feed_forecast, double q_nominal_ah) {
  CyclePrediction p;
  p.battery_id = cycle.battery_id;
  p.cycle_index = cycle.cycle_index;
  p.qmax_true_ah = cycle.q_max_ah;
  p.qmax_pred_ah = unscale_qmax(q_hat_scaled, scaler);
  p.soh_pred_pct = soh_pct(p.qmax_pred_ah, q_nominal_ah);
  p.soc_true_pct = cycle.soc_pct;
  p.t_s = cycle.t_s;

  const Index n = cycle.grid.rows();
  Matrix x(n, 4);
  x.leftCols(3) = cycle.grid;
  x.col(3).setConstant(feed_forecast ? q_hat_scaled : cycle.q_scaled);
  Matrix s_hat = fno_forward(fno, x);
  p.soc_pred_raw_pct.resize(n);
  p.soc_pred_pct.resize(n);
  for (Index t = 0; t < n; ++t) {
    p.soc_pred_raw_pct(t) = unscale_soc(s_hat(t, 0), scaler);
    p.soc_pred_pct(t) = std::clamp(p.soc_pred_raw_pct(t), 0.0, 100.0);
  }
  return p;
}

std::vector<CyclePrediction> walk_sequence(const KoopmanModel& koop,
                                           const FnoModel& fno,
                                           const ScalerState& scaler,
                                           const std::vector<Cycle>& eval_cycles,
                                           const Cycle* context, bool rollout,
                                           bool coupled, double q_nominal_ah,
                                           double* elapsed_s) {
  std::vector<CyclePrediction> preds;
  const Cycle* prev = context;
  Vector z;
  bool have_z = false;
  const auto t0 = std::chrono::steady_clock::now();
  for (const Cycle& c : eval_cycles) {
    if (prev == nullptr) {
      prev = &c;  // no context given: the first cycle only seeds the walk
      continue;
    }
    double q_hat_scaled;
    if (rollout) {
      if (!have_z) {
        z = koop.encode(prev->q_scaled);
        have_z = true;
      }
      z = koop.latent_step(z, prev->u_bar);
      q_hat_scaled = koop.decode(z);
    } else {
      q_hat_scaled = koop.forecast_next(prev->q_scaled, prev->u_bar);
    }
    // In a rollout the measured capacity is off limits even for the SoC head.
    const bool feed_forecast = coupled || rollout;
    preds.push_back(score_cycle(fno, scaler, c, q_hat_scaled, feed_forecast,
                                q_nominal_ah));
    prev = &c;
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (elapsed_s != nullptr)
    *elapsed_s = std::chrono::duration<double>(t1 - t0).count();
  return preds;
}

}  // namespace

CyclePrediction predict_cycle(const KoopmanModel& koop, const FnoModel& fno,
                              const ScalerState& scaler, const Cycle& cycle,
                              double prev_q_scaled, const Vector& prev_u_bar,
                              bool coupled, double q_nominal_ah) {
  const double q_hat_scaled = koop.forecast_next(prev_q_scaled, prev_u_bar);
  return score_cycle(fno, scaler, cycle, q_hat_scaled, coupled, q_nominal_ah);
}

EvalOutput evaluate(const KoopmanModel& koop, const FnoModel& fno,
                    const ScalerState& scaler,
                    const std::vector<Cycle>& eval_cycles, const Cycle* context,
                    bool rollout, bool coupled, double q_nominal_ah) {
  require(!eval_cycles.empty(), "evaluate: no cycles to score");
  EvalOutput out;
  double elapsed = 0.0;
  out.predictions = walk_sequence(koop, fno, scaler, eval_cycles, context,
                                  rollout, coupled, q_nominal_ah, &elapsed);
  out.metrics = metrics_from_predictions(out.predictions);
  out.metrics.time_s = elapsed;
  return out;
}

std::string metrics_to_json(const Metrics& m) {
  ordered_json j;
  j["scenario"] = m.scenario;
  j["k_shot"] = m.k_shot;
  j["soc_rmse_pct"] = m.soc_rmse_pct;
  j["soc_mae_pct"] = m.soc_mae_pct;
  j["soc_rmse_raw_pct"] = m.soc_rmse_raw_pct;
  j["soc_mae_raw_pct"] = m.soc_mae_raw_pct;
  j["qmax_rmse_ah"] = m.qmax_rmse_ah;
  j["qmax_mae_ah"] = m.qmax_mae_ah;
  j["time_s"] = m.time_s;
  return j.dump(2) + "\n";
}

std::string predictions_to_csv(const std::vector<CyclePrediction>& preds) {
  std::string out =
      "battery_id,cycle_index,t_s,soc_true_pct,soc_pred_pct,qmax_true_ah,"
      "qmax_pred_ah\n";
  for (const CyclePrediction& p : preds) {
    for (Index t = 0; t < p.t_s.size(); ++t) {
      out += p.battery_id;
      out += ',';
      out += std::to_string(p.cycle_index);
      out += ',';
      out += format_double(p.t_s(t));
      out += ',';
      out += format_double(p.soc_true_pct(t));
      out += ',';
      out += format_double(p.soc_pred_pct(t));
      out += ',';
      out += format_double(p.qmax_true_ah);
      out += ',';
      out += format_double(p.qmax_pred_ah);
      out += '\n';
    }
  }
  return out;
}

// --- checkpointing -----------------------------------------------------------

namespace {

ordered_json scaler_to_json(const ScalerState& s) {
  ordered_json j;
  j["v_min"] = s.v_min;
  j["v_max"] = s.v_max;
  j["i_min"] = s.i_min;
  j["i_max"] = s.i_max;
  j["t_min"] = s.t_min;
  j["t_max"] = s.t_max;
  j["q_min"] = s.q_min;
  j["q_max"] = s.q_max;
  j["soc_min"] = s.soc_min;
  j["soc_max"] = s.soc_max;
  return j;
}

double json_number(const ordered_json& j, const std::string& key) {
  require(j.contains(key), "checkpoint: missing field '" + key + "'");
  require(j.at(key).is_number(), "checkpoint: field '" + key + "' is not a number");
  return j.at(key).get<double>();
}

ScalerState scaler_from_json(const ordered_json& j) {
  ScalerState s;
  s.v_min = json_number(j, "v_min");
  s.v_max = json_number(j, "v_max");
  s.i_min = json_number(j, "i_min");
  s.i_max = json_number(j, "i_max");
  s.t_min = json_number(j, "t_min");
  s.t_max = json_number(j, "t_max");
  s.q_min = json_number(j, "q_min");
  s.q_max = json_number(j, "q_max");
  s.soc_min = json_number(j, "soc_min");
  s.soc_max = json_number(j, "soc_max");
  return s;
}

ordered_json blocks_to_json(std::vector<ParamBlock>& blocks) {
  ordered_json j;
  for (const ParamBlock& b : blocks)
    j[b.name] = std::vector<double>(b.data, b.data + b.size);
  return j;
}

void blocks_from_json(const ordered_json& j, std::vector<ParamBlock>& blocks,
                      const std::string& what) {
  require(j.is_object(), "checkpoint: '" + what + "' is not an object");
  require(j.size() == blocks.size(),
          "checkpoint: '" + what + "' holds " + std::to_string(j.size()) +
              " blocks, expected " + std::to_string(blocks.size()));
  for (ParamBlock& b : blocks) {
    require(j.contains(b.name),
            "checkpoint: missing parameter block '" + what + "." + b.name + "'");
    const auto& arr = j.at(b.name);
    require(arr.is_array() && arr.size() == b.size,
            "checkpoint: parameter block '" + what + "." + b.name +
                "' has wrong size");
    for (std::size_t i = 0; i < b.size; ++i) {
      require(arr[i].is_number(), "checkpoint: non-numeric entry in block '" +
                                      what + "." + b.name + "'");
      b.data[i] = arr[i].get<double>();
    }
  }
}

}  // namespace

std::string checkpoint_to_json(const TrainedBundle& bundle) {
  // Copies so the parameter views can be taken without mutating the input.
  KoopmanModel koop = bundle.koopman;
  FnoModel fno = bundle.fno;
  std::vector<ParamBlock> kb = koop.param_blocks();
  std::vector<ParamBlock> fb = fno.param_blocks();

  ordered_json j;
  j["format_version"] = 1;
  j["config_hash"] = config_hash(bundle.cfg);
  j["config"] = ordered_json::parse(config_to_json(bundle.cfg));
  j["scaler"] = scaler_to_json(bundle.scaler);
  j["koopman"] = blocks_to_json(kb);
  j["fno"] = blocks_to_json(fb);
  return j.dump() + "\n";
}

TrainedBundle checkpoint_from_json(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  require(j.is_object(), "checkpoint: top level is not an object");
  require(j.contains("format_version") && j.at("format_version").is_number_integer(),
          "checkpoint: missing integer 'format_version'");
  const long version = j.at("format_version").get<long>();
  require(version == 1, "checkpoint: unsupported format_version " +
                            std::to_string(version));
  for (const char* key : {"config_hash", "config", "scaler", "koopman", "fno"})
    require(j.contains(key), std::string("checkpoint: missing field '") + key + "'");

  TrainedBundle bundle;
  bundle.cfg = config_from_json_text(j.at("config").dump());
  const std::string stored_hash = j.at("config_hash").get<std::string>();
  const std::string actual_hash = config_hash(bundle.cfg);
  require(stored_hash == actual_hash,
          "checkpoint: config fingerprint mismatch (stored " + stored_hash +
              ", recomputed " + actual_hash + ")");
  bundle.scaler = scaler_from_json(j.at("scaler"));

  Rng dummy(0);
  bundle.koopman = KoopmanModel::create(bundle.cfg.koopman, dummy);
  bundle.koopman.rho_max = bundle.cfg.rho_max;
  bundle.fno = FnoModel::create(bundle.cfg.fno, dummy);
  std::vector<ParamBlock> kb = bundle.koopman.param_blocks();
  std::vector<ParamBlock> fb = bundle.fno.param_blocks();
  blocks_from_json(j.at("koopman"), kb, "koopman");
  blocks_from_json(j.at("fno"), fb, "fno");
  return bundle;
}

void save_checkpoint(const TrainedBundle& bundle, const std::string& path) {
  write_text(path, checkpoint_to_json(bundle));
}

TrainedBundle load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_text(path));
}

// --- battery loading ----------------------------------------------------------

std::vector<LoadedBattery> load_batteries(const std::string& data_path,
                                          Index n_c) {
  const fs::path p(data_path);
  require(fs::exists(p), "data path does not exist: " + data_path);

  std::vector<fs::path> csvs;
  fs::path meta_dir;
  if (fs::is_directory(p)) {
    meta_dir = p;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (name.size() > 11 && name.substr(name.size() - 11) == "_cycles.csv")
        csvs.push_back(entry.path());
    }
    std::sort(csvs.begin(), csvs.end());
    require(!csvs.empty(), "no *_cycles.csv files found in " + data_path);
  } else {
    csvs.push_back(p);
    meta_dir = p.parent_path();
  }

  std::map<std::string, std::map<long, RawCycle>> by_battery;
  for (const fs::path& csv : csvs) {
    for (RawCycle& rc : parse_cycles(csv.string())) {
      auto& cycles = by_battery[rc.battery_id];
      require(cycles.find(rc.cycle_index) == cycles.end(),
              "battery " + rc.battery_id + " has duplicate cycle " +
                  std::to_string(rc.cycle_index) + " across input files");
      cycles.emplace(rc.cycle_index, std::move(rc));
    }
  }
  require(!by_battery.empty(), "no cycles found in " + data_path);

  std::vector<LoadedBattery> out;
  for (auto& [id, cycles] : by_battery) {
    LoadedBattery b;
    const fs::path meta_path = meta_dir / (id + "_meta.json");
    require(fs::exists(meta_path),
            "missing metadata file for battery " + id + ": " + meta_path.string());
    b.meta = parse_battery_meta(meta_path.string());
    require(b.meta.battery_id == id,
            "metadata file " + meta_path.string() + " declares battery '" +
                b.meta.battery_id + "', expected '" + id + "'");
    for (auto& [idx, rc] : cycles) b.cycles.push_back(resample_cycle(rc, n_c));
    out.push_back(std::move(b));
  }
  return out;
}

OodRoles resolve_ood_roles(const std::vector<LoadedBattery>& batteries,
                           const SplitSection& split) {
  require(batteries.size() >= 2,
          "transfer scenarios need at least two batteries (sources + held-out)");

  auto index_of = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < batteries.size(); ++i)
      if (batteries[i].meta.battery_id == id) return i;
    throw Error("unknown battery id '" + id + "' in split configuration");
  };

  OodRoles roles;
  if (!split.test_battery.empty()) {
    roles.test = index_of(split.test_battery);
  } else {
    roles.test = batteries.size() - 1;
  }
  if (!split.train_batteries.empty()) {
    for (const std::string& id : split.train_batteries)
      roles.train.push_back(index_of(id));
  } else {
    for (std::size_t i = 0; i < batteries.size(); ++i)
      if (i != roles.test) roles.train.push_back(i);
  }
  require(!roles.train.empty(), "no source batteries selected");
  for (std::size_t i : roles.train)
    require(i != roles.test,
            "battery '" + batteries[roles.test].meta.battery_id +
                "' cannot be both a source and the held-out battery");
  return roles;
}

// --- scenario runs -------------------------------------------------------------

namespace {

// Evenly spaced interior positions for ceil(val_fraction * n) validation
// cycles. Positions exclude both block boundaries and are pairwise
// non-adjacent, so every validation cycle keeps a training predecessor and
// the optimisation pool spans the block's full degradation range — holding
// out a trailing block instead would force the model to extrapolate past its
// training data exactly where the held-out test cycles continue.
std::vector<std::size_t> validation_positions(std::size_t n,
                                              double val_fraction) {
  std::vector<std::size_t> pos;
  if (n < 4 || val_fraction <= 0.0) return pos;
  const auto want = static_cast<std::size_t>(
      std::ceil(val_fraction * static_cast<double>(n)));
  const double stride =
      static_cast<double>(n) / static_cast<double>(want + 1);
  std::size_t prev_plus_2 = 1;  // smallest admissible next position
  for (std::size_t i = 1; i <= want; ++i) {
    if (prev_plus_2 > n - 2) break;
    auto p = static_cast<std::size_t>(
        std::llround(stride * static_cast<double>(i)));
    if (p < prev_plus_2) p = prev_plus_2;
    if (p > n - 2) p = n - 2;
    pos.push_back(p);
    prev_plus_2 = p + 2;
  }
  return pos;
}

std::vector<Cycle> scale_all(const std::vector<ResampledCycle>& cycles,
                             const ScalerState& s) {
  std::vector<Cycle> out;
  out.reserve(cycles.size());
  for (const ResampledCycle& rc : cycles) out.push_back(apply_scaler(rc, s));
  return out;
}

// Splits one contiguous cycle block into an optimisation series (the block
// minus the validation cycles; the trainer's adjacency rule skips the seams)
// and a validation series of (predecessor, cycle) runs, each contributing
// exactly the one-step pair that predicts the held-out cycle.
void split_block(const std::vector<ResampledCycle>& block,
                 const ScalerState& scaler, double val_fraction,
                 CycleSeries* train_out, CycleSeries* val_out) {
  const std::vector<std::size_t> pos =
      validation_positions(block.size(), val_fraction);
  std::size_t next = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (next < pos.size() && i == pos[next]) {
      val_out->push_back(apply_scaler(block[i - 1], scaler));
      val_out->push_back(apply_scaler(block[i], scaler));
      ++next;
    } else {
      train_out->push_back(apply_scaler(block[i], scaler));
    }
  }
}

}  // namespace

TrainedBundle run_training(const std::vector<LoadedBattery>& batteries,
                           const RunConfig& cfg) {
  require(!batteries.empty(), "no batteries to train on");

  std::vector<ResampledCycle> fit_pool;
  std::vector<std::vector<ResampledCycle>> train_blocks;
  for (const LoadedBattery& b : batteries) {
    ContiguousSplit split = contiguous_split(b.cycles, cfg.split.test_fraction);
    train_blocks.push_back(std::move(split.train));
    fit_pool.insert(fit_pool.end(), train_blocks.back().begin(),
                    train_blocks.back().end());
  }

  const ScalerState scaler = fit_scaler(fit_pool);
  std::vector<CycleSeries> train_sets(batteries.size()), val_sets(batteries.size());
  for (std::size_t b = 0; b < batteries.size(); ++b)
    split_block(train_blocks[b], scaler, cfg.train.val_fraction,
                &train_sets[b], &val_sets[b]);

  TrainOutput out = pooled_train(train_sets, val_sets, cfg);
  TrainedBundle bundle;
  bundle.cfg = cfg;
  bundle.scaler = scaler;
  bundle.koopman = std::move(out.koopman);
  bundle.fno = std::move(out.fno);
  bundle.history = std::move(out.history);
  return bundle;
}

EvalOutput evaluate_contiguous(const TrainedBundle& bundle,
                               const std::vector<LoadedBattery>& batteries,
                               bool rollout) {
  require(!batteries.empty(), "no batteries to evaluate");
  const RunConfig& cfg = bundle.cfg;

  EvalOutput merged;
  double elapsed = 0.0;
  for (const LoadedBattery& b : batteries) {
    ContiguousSplit split = contiguous_split(b.cycles, cfg.split.test_fraction);
    const Cycle context = apply_scaler(split.train.back(), bundle.scaler);
    const std::vector<Cycle> eval_cycles = scale_all(split.test, bundle.scaler);
    std::vector<CyclePrediction> preds = walk_sequence(
        bundle.koopman, bundle.fno, bundle.scaler, eval_cycles, &context,
        rollout, cfg.coupled, b.meta.nominal_capacity_ah, &elapsed);
    merged.metrics.time_s += elapsed;
    merged.predictions.insert(merged.predictions.end(),
                              std::make_move_iterator(preds.begin()),
                              std::make_move_iterator(preds.end()));
  }
  const double time_s = merged.metrics.time_s;
  merged.metrics = metrics_from_predictions(merged.predictions);
  merged.metrics.scenario = scenario_name(cfg.split.scenario);
  merged.metrics.k_shot = cfg.split.k_shot;
  merged.metrics.time_s = time_s;
  return merged;
}

namespace {

// Scaled source-battery pools for transfer training/adaptation: every source
// battery holds out interior validation cycles, the rest optimises.
void source_pools(const std::vector<LoadedBattery>& batteries,
                  const OodRoles& roles, const RunConfig& cfg,
                  const ScalerState& scaler, std::vector<CycleSeries>* train_sets,
                  std::vector<CycleSeries>* val_sets) {
  for (std::size_t i : roles.train) {
    CycleSeries train, val;
    split_block(batteries[i].cycles, scaler, cfg.train.val_fraction, &train, &val);
    train_sets->push_back(std::move(train));
    val_sets->push_back(std::move(val));
  }
}

}  // namespace

OodRun run_ood(const std::vector<LoadedBattery>& batteries, const RunConfig& cfg,
               const std::vector<double>& k_list) {
  const OodRoles roles = resolve_ood_roles(batteries, cfg.split);

  std::vector<ResampledCycle> fit_pool;
  for (std::size_t i : roles.train)
    fit_pool.insert(fit_pool.end(), batteries[i].cycles.begin(),
                    batteries[i].cycles.end());
  const ScalerState scaler = fit_scaler(fit_pool);

  std::vector<CycleSeries> train_sets, val_sets;
  source_pools(batteries, roles, cfg, scaler, &train_sets, &val_sets);
  TrainOutput out = pooled_train(train_sets, val_sets, cfg);

  OodRun run;
  run.base.cfg = cfg;
  run.base.scaler = scaler;
  run.base.koopman = std::move(out.koopman);
  run.base.fno = std::move(out.fno);
  run.base.history = std::move(out.history);
  run.points = run_ood_from_base(run.base, batteries, k_list);
  return run;
}

std::vector<OodPoint> run_ood_from_base(const TrainedBundle& base,
                                        const std::vector<LoadedBattery>& batteries,
                                        const std::vector<double>& k_list) {
  const RunConfig& cfg = base.cfg;
  const OodRoles roles = resolve_ood_roles(batteries, cfg.split);
  const LoadedBattery& held_out = batteries[roles.test];

  std::vector<OodPoint> points;
  for (double k : k_list) {
    FewShotSelection fs = fewshot_select(held_out.cycles, k);

    const KoopmanModel* koop = &base.koopman;
    const FnoModel* fno = &base.fno;
    TrainOutput adapted;
    std::vector<Cycle> support_scaled = scale_all(fs.support, base.scaler);
    if (!support_scaled.empty()) {
      std::vector<CycleSeries> train_sets, val_sets;
      source_pools(batteries, roles, cfg, base.scaler, &train_sets, &val_sets);
      train_sets.push_back(support_scaled);
      val_sets.emplace_back();
      TrainOutput init;
      init.koopman = base.koopman;
      init.fno = base.fno;
      adapted = pooled_train(train_sets, val_sets, cfg, &init,
                             cfg.train.adapt_epochs);
      koop = &adapted.koopman;
      fno = &adapted.fno;
    }

    const Cycle* context = support_scaled.empty() ? nullptr : &support_scaled.back();
    const std::vector<Cycle> eval_cycles = scale_all(fs.eval, base.scaler);
    EvalOutput eo = evaluate(*koop, *fno, base.scaler, eval_cycles, context,
                             /*rollout=*/false, cfg.coupled,
                             held_out.meta.nominal_capacity_ah);
    OodPoint point;
    point.k_shot = k;
    point.metrics = eo.metrics;
    point.metrics.scenario = scenario_name(cfg.split.scenario);
    point.metrics.k_shot = k;
    point.spec = spectrum(koop->k_op);
    point.predictions = std::move(eo.predictions);
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace kfno
