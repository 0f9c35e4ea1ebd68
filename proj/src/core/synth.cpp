/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/synth.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace kfno {
namespace {

void validate(const SynthConfig& c) {
  require(c.n_cycles >= 1, "synth: n_cycles must be >= 1");
  require(c.nominal_capacity_ah > 0.0, "synth: nominal capacity must be positive");
  require(c.fade_rate >= 0.0 && c.fade_rate < 0.1,
          "synth: fade_rate must lie in [0, 0.1)");
  require(c.fade_floor > 0.0 && c.fade_floor <= 1.0,
          "synth: fade_floor must lie in (0, 1]");
  require(c.charge_c_rate > 0.0 && c.discharge_c_rate > 0.0,
          "synth: c-rates must be positive");
  require(c.cv_switch_soc > 0.0 && c.cv_switch_soc < 1.0,
          "synth: cv_switch_soc must lie in (0, 1)");
  require(c.cv_time_constant_h > 0.0, "synth: cv time constant must be positive");
  require(c.samples_per_cycle >= 8, "synth: need at least 8 samples per cycle");
  require(c.noise_voltage_v >= 0.0 && c.noise_current_a >= 0.0 &&
              c.noise_temperature_c >= 0.0 && c.noise_capacity_ah >= 0.0,
          "synth: noise levels must be non-negative");
}

// Exact capacity of cycle c (1-based), in Ah.
double q_max_at(const SynthConfig& cfg, long cycle) {
  const double r_eff =
      cfg.fade_rate *
      (1.0 + cfg.temperature_sensitivity * (cfg.temperature_c - 25.0));
  const double s = cfg.fade_floor +
                   (1.0 - cfg.fade_floor) *
                       std::exp(-r_eff * static_cast<double>(cycle));
  return cfg.nominal_capacity_ah * s;
}

// Piecewise cycle profile in hours, parametrised by the SoC fraction s(t):
//   CC charge:  s rises linearly 0 -> s_cv at I = -I_ch
//   CV charge:  s -> 1 exponentially, current tapers with it
//   CC discharge: s falls linearly s_end -> 0 at I = +I_dis
// Discharge current is positive; charging negative. dq_d/dt = I holds
// exactly, so Coulomb counting and the emitted targets agree by
// construction.
struct CycleProfile {
  double q_max;
  double i_ch, i_dis;
  double t_cc, t_cv, t_dis, total;  // hours
  double s_cv, s_end, tau;

  explicit CycleProfile(const SynthConfig& cfg, double q_max_ah) {
    q_max = q_max_ah;
    i_ch = cfg.charge_c_rate * cfg.nominal_capacity_ah;
    i_dis = cfg.discharge_c_rate * cfg.nominal_capacity_ah;
    s_cv = cfg.cv_switch_soc;
    tau = cfg.cv_time_constant_h;
    t_cc = s_cv * q_max / i_ch;
    t_cv = 4.0 * tau;
    s_end = 1.0 - (1.0 - s_cv) * std::exp(-t_cv / tau);
    t_dis = s_end * q_max / i_dis;
    total = t_cc + t_cv + t_dis;
  }

  double soc_fraction(double t_h) const {
    if (t_h <= t_cc) return s_cv * t_h / t_cc;
    if (t_h <= t_cc + t_cv)
      return 1.0 - (1.0 - s_cv) * std::exp(-(t_h - t_cc) / tau);
    const double td = t_h - t_cc - t_cv;
    return std::max(0.0, s_end - i_dis * td / q_max);
  }

  double current_a(double t_h) const {
    if (t_h <= t_cc) return -i_ch;
    if (t_h <= t_cc + t_cv)
      return -(q_max * (1.0 - s_cv) / tau) * std::exp(-(t_h - t_cc) / tau);
    return i_dis;
  }
};

}  // namespace

SynthBattery generate_battery(const SynthConfig& cfg) {
  validate(cfg);
  SynthBattery out;
  out.meta.battery_id = cfg.battery_id;
  out.meta.chemistry = cfg.chemistry;
  out.meta.charge_c_rate = cfg.charge_c_rate;
  out.meta.discharge_c_rate = cfg.discharge_c_rate;
  out.meta.temperature_c = cfg.temperature_c;
  out.meta.nominal_capacity_ah = cfg.nominal_capacity_ah;
  out.meta.nominal_voltage_v = cfg.voltage_base_v + 0.5 * cfg.voltage_slope_v;

  Rng rng(cfg.seed);
  const double r_ohm = cfg.internal_resistance_ohm *
                       (1.0 + cfg.resistance_temp_coeff * (cfg.temperature_c - 25.0));
  const double v_offset = cfg.voltage_temp_coeff_v * (cfg.temperature_c - 25.0);

  out.cycles.reserve(static_cast<std::size_t>(cfg.n_cycles));
  for (long c = 1; c <= cfg.n_cycles; ++c) {
    const double q_max = q_max_at(cfg, c);
    out.truth.q_max_ah.push_back(q_max);
    out.truth.soh_pct.push_back(soh_pct(q_max, cfg.nominal_capacity_ah));
    CycleProfile prof(cfg, q_max);

    RawCycle rc;
    rc.battery_id = cfg.battery_id;
    rc.cycle_index = c;
    rc.q_max_ah = q_max + (cfg.noise_capacity_ah > 0.0
                               ? rng.normal(0.0, cfg.noise_capacity_ah)
                               : 0.0);
    require(rc.q_max_ah > 0.0, "synth: capacity noise drove q_max non-positive");

    const long n = cfg.samples_per_cycle;
    rc.samples.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      const double t_h =
          prof.total * static_cast<double>(i) / static_cast<double>(n - 1);
      const double s = prof.soc_fraction(t_h);
      const double cur = prof.current_a(t_h);
      const double v_true = cfg.voltage_base_v + cfg.voltage_slope_v * s -
                            cur * r_ohm + v_offset;
      RawSample smp;
      smp.t_s = t_h * 3600.0;
      smp.voltage_v =
          v_true + (cfg.noise_voltage_v > 0.0 ? rng.normal(0.0, cfg.noise_voltage_v)
                                              : 0.0);
      smp.current_a =
          cur + (cfg.noise_current_a > 0.0 ? rng.normal(0.0, cfg.noise_current_a)
                                           : 0.0);
      smp.temperature_c =
          cfg.temperature_c +
          (cfg.noise_temperature_c > 0.0 ? rng.normal(0.0, cfg.noise_temperature_c)
                                         : 0.0);
      // Targets are exact: discharged charge from the analytic SoC fraction,
      // SoC as its matching percentage.
      smp.q_discharged_ah = (1.0 - s) * q_max;
      smp.soc_pct = 100.0 * s;
      rc.samples.push_back(smp);
    }
    out.cycles.push_back(std::move(rc));
  }
  return out;
}

std::vector<SynthBattery> generate_fleet(const FleetConfig& cfg) {
  std::vector<SynthConfig> configs(3, cfg.base);
  if (cfg.cycles_per_battery > 0)
    for (auto& c : configs) c.n_cycles = cfg.cycles_per_battery;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    configs[i].battery_id = "B-" + std::to_string(i + 1);
    configs[i].seed = cfg.base.seed + 1000 * (i + 1);
  }
  switch (cfg.shift) {
    case FleetShift::kTemperature:
      configs[0].temperature_c = 25.0;
      configs[1].temperature_c = 35.0;
      configs[2].temperature_c = 45.0;
      break;
    case FleetShift::kChargeRate:
      configs[0].charge_c_rate = 0.25;
      configs[1].charge_c_rate = 0.5;
      configs[2].charge_c_rate = 1.0;
      break;
    case FleetShift::kChemistry:
      // Chemistry proxy: nominal capacity and open-circuit slope move
      // together; the held-out pair differs from both sources.
      configs[0].chemistry = "NCA";
      configs[0].nominal_capacity_ah = 3.4;
      configs[0].voltage_slope_v = 1.1;
      configs[1].chemistry = "NMC+NCA";
      configs[1].nominal_capacity_ah = 2.5;
      configs[1].voltage_slope_v = 1.15;
      configs[2].chemistry = "NMC";
      configs[2].nominal_capacity_ah = 3.5;
      configs[2].voltage_slope_v = 1.2;
      break;
  }

  std::vector<SynthBattery> fleet(configs.size());
  const int threads = std::min<int>(worker_thread_count(),
                                    static_cast<int>(configs.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i)
      fleet[i] = generate_battery(configs[i]);
  } else {
    // Each battery owns its seed, so parallel generation is deterministic.
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= configs.size()) return;
          fleet[i] = generate_battery(configs[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return fleet;
}

std::string cycles_to_csv(const SynthBattery& b) {
  std::string out =
      "battery_id,cycle_index,t_s,voltage_v,current_a,temperature_c,"
      "q_discharged_ah,q_max_ah,soc_pct\n";
  for (const RawCycle& rc : b.cycles) {
    for (const RawSample& s : rc.samples) {
      out += rc.battery_id;
      out += ',';
      out += std::to_string(rc.cycle_index);
      out += ',';
      out += format_double(s.t_s);
      out += ',';
      out += format_double(s.voltage_v);
      out += ',';
      out += format_double(s.current_a);
      out += ',';
      out += format_double(s.temperature_c);
      out += ',';
      out += format_double(s.q_discharged_ah);
      out += ',';
      out += format_double(rc.q_max_ah);
      out += ',';
      out += format_double(*s.soc_pct);
      out += '\n';
    }
  }
  return out;
}

std::string meta_to_json(const BatteryMeta& m) {
  nlohmann::ordered_json j;
  j["battery_id"] = m.battery_id;
  j["chemistry"] = m.chemistry;
  j["charge_c_rate"] = m.charge_c_rate;
  j["discharge_c_rate"] = m.discharge_c_rate;
  j["temperature_c"] = m.temperature_c;
  j["nominal_capacity_ah"] = m.nominal_capacity_ah;
  j["nominal_voltage_v"] = m.nominal_voltage_v;
  return j.dump(2) + "\n";
}

std::string truth_to_csv(const SynthBattery& b) {
  std::string out = "battery_id,cycle_index,q_max_true_ah,soh_true_pct\n";
  for (std::size_t i = 0; i < b.truth.q_max_ah.size(); ++i) {
    out += b.meta.battery_id;
    out += ',';
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(b.truth.q_max_ah[i]);
    out += ',';
    out += format_double(b.truth.soh_pct[i]);
    out += '\n';
  }
  return out;
}

void write_battery_files(const SynthBattery& b, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto write = [&](const std::string& name, const std::string& content) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    require(f.good(), "cannot open for writing: " + p.string());
    f << content;
    require(f.good(), "write failed: " + p.string());
  };
  write(b.meta.battery_id + "_cycles.csv", cycles_to_csv(b));
  write(b.meta.battery_id + "_meta.json", meta_to_json(b.meta));
  write(b.meta.battery_id + "_truth.csv", truth_to_csv(b));
}

}  // namespace kfno
