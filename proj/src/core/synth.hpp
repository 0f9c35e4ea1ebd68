/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_SYNTH_HPP
#define KFNO_CORE_SYNTH_HPP

#include "core/data.hpp"

namespace kfno {

// Closed-form battery simulator. Every emitted target is analytically known:
// capacity fades as q_n * (s_min + (1 - s_min) * exp(-r_eff * c)) with
// r_eff = fade_rate * (1 + kappa * (T - 25)), cycles run a CC-CV charge
// followed by a CC discharge with exact charge bookkeeping, and voltage is an
// affine map of the state of charge plus an ohmic term. Gaussian noise lands
// only on the observed channels (V, I, T and the per-cycle capacity reading),
// never on the SoC / discharged-charge targets.
struct SynthConfig {
  std::string battery_id = "B-1";
  std::string chemistry = "NMC";
  long n_cycles = 300;
  double nominal_capacity_ah = 3.5;
  double fade_rate = 0.0015;        // per cycle at 25 degC
  double fade_floor = 0.8;          // s_min, asymptotic capacity fraction
  double temperature_c = 25.0;
  double charge_c_rate = 0.5;
  double discharge_c_rate = 1.0;
  double temperature_sensitivity = 0.02;   // kappa per degC
  double voltage_base_v = 3.0;
  double voltage_slope_v = 1.2;            // volts across the full SoC span
  double internal_resistance_ohm = 0.05;
  double resistance_temp_coeff = 0.01;     // fractional change per degC
  double voltage_temp_coeff_v = 0.002;     // additive volts per degC above 25
  double cv_switch_soc = 0.8;              // CC->CV handover point
  double cv_time_constant_h = 0.25;
  double noise_voltage_v = 0.003;
  double noise_current_a = 0.01;
  double noise_temperature_c = 0.05;
  double noise_capacity_ah = 0.0015;
  long samples_per_cycle = 180;
  std::uint64_t seed = 42;
};

struct SynthTruth {
  std::vector<double> q_max_ah;  // exact per-cycle capacity
  std::vector<double> soh_pct;   // exact per-cycle health
};

struct SynthBattery {
  BatteryMeta meta;
  std::vector<RawCycle> cycles;  // observed channels noisy, targets exact
  SynthTruth truth;
};

SynthBattery generate_battery(const SynthConfig& cfg);

enum class FleetShift { kTemperature, kChargeRate, kChemistry };

struct FleetConfig {
  SynthConfig base;
  FleetShift shift = FleetShift::kTemperature;
  long cycles_per_battery = 0;  // 0 = keep base.n_cycles
};

// Three-battery fleet: two source batteries plus one whose generating
// condition is shifted along the requested axis. The shifted battery is
// always last (ids B-1, B-2, B-3). Per-battery seeds derive from base.seed.
// Generation parallelises across batteries up to worker_thread_count().
std::vector<SynthBattery> generate_fleet(const FleetConfig& cfg);

// Writers for the on-disk layout consumed by the ingestion side:
//   <id>_cycles.csv, <id>_meta.json, <id>_truth.csv
void write_battery_files(const SynthBattery& b, const std::string& out_dir);

std::string cycles_to_csv(const SynthBattery& b);
std::string meta_to_json(const BatteryMeta& m);
std::string truth_to_csv(const SynthBattery& b);

}  // namespace kfno

#endif  // KFNO_CORE_SYNTH_HPP
