/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_DATA_HPP
#define KFNO_CORE_DATA_HPP

#include "core/common.hpp"

#include <map>
#include <optional>

namespace kfno {

// One as-measured sample row.
struct RawSample {
  double t_s = 0.0;
  double voltage_v = 0.0;
  double current_a = 0.0;
  double temperature_c = 0.0;
  double q_discharged_ah = 0.0;
  std::optional<double> soc_pct;  // explicit target when the source provides it
};

// One measured cycle, samples sorted by strictly increasing time.
struct RawCycle {
  std::string battery_id;
  long cycle_index = 0;
  double q_max_ah = 0.0;
  std::vector<RawSample> samples;
};

struct BatteryMeta {
  std::string battery_id;
  std::string chemistry;
  double charge_c_rate = 0.0;
  double discharge_c_rate = 0.0;
  double temperature_c = 0.0;
  double nominal_capacity_ah = 0.0;
  double nominal_voltage_v = 0.0;
};

// Cycle resampled to a fixed grid, still in physical units.
struct ResampledCycle {
  std::string battery_id;
  long cycle_index = 0;
  double q_max_ah = 0.0;
  Vector t_s;        // N_c, uniform, endpoints preserved
  Matrix grid;       // N_c x 3: voltage, current, temperature
  Vector soc_pct;    // N_c target, clamped to [0, 100]
};

// Per-channel min-max ranges fitted on training data only.
struct ScalerState {
  double v_min = 0.0, v_max = 1.0;
  double i_min = 0.0, i_max = 1.0;
  double t_min = 0.0, t_max = 1.0;
  double q_min = 0.0, q_max = 1.0;
  double soc_min = 0.0, soc_max = 1.0;
};

// Fully prepared cycle in scaled units, ready for the models.
struct Cycle {
  std::string battery_id;
  long cycle_index = 0;
  Matrix grid;         // N_c x 3, scaled
  Vector soc_scaled;   // N_c
  Vector u_bar;        // 3, per-channel mean of the scaled grid
  double q_scaled = 0.0;
  // Physical-unit references used when reporting metrics.
  double q_max_ah = 0.0;
  Vector soc_pct;      // N_c
  Vector t_s;          // N_c
};

// --- ingestion ------------------------------------------------------------

// Parses the cycle CSV schema
//   battery_id,cycle_index,t_s,voltage_v,current_a,temperature_c,
//   q_discharged_ah,q_max_ah[,soc_pct]
// Rows may arrive in any order; they are grouped by (battery, cycle) and
// sorted by time. q_max_ah may be empty/omitted, in which case it is the
// cycle's max discharged charge. Malformed rows raise Error with the line
// number; duplicate timestamps within a cycle raise Error naming the cycle.
std::vector<RawCycle> parse_cycles(const std::string& csv_path);
std::vector<RawCycle> parse_cycles_text(const std::string& csv_text,
                                        const std::string& origin);

BatteryMeta parse_battery_meta(const std::string& json_path);

// --- per-cycle transforms ---------------------------------------------------

// Linear resampling onto an n_c-point uniform grid spanning [t_first, t_last]
// with both endpoints exact. Requires >= 2 samples and n_c >= 2. The SoC
// target comes from the explicit column when present, otherwise from the
// discharge-depth identity.
ResampledCycle resample_cycle(const RawCycle& raw, Index n_c);

// SoC from discharged charge: (1 - q_d/q_max) * 100, clamped to [0, 100].
// q_max must be positive and q_d non-negative.
double soc_from_discharge(double q_discharged_ah, double q_max_ah);

// SoH in percent: 100 * q_max / q_nominal. q_nominal must be positive.
double soh_pct(double q_max_ah, double q_nominal_ah);

// --- scaling ----------------------------------------------------------------

// Fits per-channel min-max ranges over the given cycles. A degenerate channel
// (max == min) raises Error naming the channel.
ScalerState fit_scaler(const std::vector<ResampledCycle>& train_cycles);

// Applies the fitted ranges; invert_cycle_scaling is its exact inverse up to
// rounding.
Cycle apply_scaler(const ResampledCycle& rc, const ScalerState& s);

double scale_qmax(double q_ah, const ScalerState& s);
double unscale_qmax(double q_scaled, const ScalerState& s);
double scale_soc(double soc_pct, const ScalerState& s);
double unscale_soc(double soc_scaled, const ScalerState& s);

// --- splits -----------------------------------------------------------------

struct ContiguousSplit {
  std::vector<ResampledCycle> train;
  std::vector<ResampledCycle> test;
};

// Last ceil(fraction * N) cycles (by cycle order) become the test block.
// fraction must lie in (0, 1) and both sides must be non-empty.
ContiguousSplit contiguous_split(const std::vector<ResampledCycle>& cycles,
                                 double test_fraction);

struct FewShotSelection {
  std::vector<ResampledCycle> support;  // earliest ceil(k * N) cycles
  std::vector<ResampledCycle> eval;     // the rest
};

// k is a fraction in [0, 1); the evaluation remainder must be non-empty.
FewShotSelection fewshot_select(const std::vector<ResampledCycle>& cycles,
                                double k);

}  // namespace kfno

#endif  // KFNO_CORE_DATA_HPP
