/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Synthetic generator: closed-form capacity fade, noise-free physical
 * consistency (voltage map, Coulomb counting, phase structure), determinism,
 * fleet shift axes, and the write -> parse round trip.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/synth.hpp"

using namespace kfno;

namespace {

SynthConfig clean_config() {
  SynthConfig cfg;
  cfg.n_cycles = 12;
  cfg.samples_per_cycle = 64;
  cfg.noise_voltage_v = 0.0;
  cfg.noise_current_a = 0.0;
  cfg.noise_temperature_c = 0.0;
  cfg.noise_capacity_ah = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("capacity fade follows its closed form exactly") {
  SynthConfig cfg = clean_config();
  cfg.n_cycles = 40;
  cfg.temperature_c = 35.0;  // exercise the temperature acceleration too
  SynthBattery b = generate_battery(cfg);
  REQUIRE(b.truth.q_max_ah.size() == 40);

  const double r_eff =
      cfg.fade_rate * (1.0 + cfg.temperature_sensitivity * (35.0 - 25.0));
  for (long c = 1; c <= 40; ++c) {
    const double expected =
        cfg.nominal_capacity_ah *
        (cfg.fade_floor +
         (1.0 - cfg.fade_floor) * std::exp(-r_eff * static_cast<double>(c)));
    CHECK(b.truth.q_max_ah[static_cast<std::size_t>(c - 1)] ==
          doctest::Approx(expected).epsilon(1e-15));
    CHECK(b.truth.soh_pct[static_cast<std::size_t>(c - 1)] ==
          doctest::Approx(100.0 * expected / cfg.nominal_capacity_ah)
              .epsilon(1e-15));
    // Noise-free: the emitted capacity reading equals the truth.
    CHECK(b.cycles[static_cast<std::size_t>(c - 1)].q_max_ah ==
          doctest::Approx(expected).epsilon(1e-15));
  }
  // Fade is monotone decreasing towards the floor.
  for (std::size_t c = 1; c < b.truth.q_max_ah.size(); ++c)
    CHECK(b.truth.q_max_ah[c] < b.truth.q_max_ah[c - 1]);
  CHECK(b.truth.q_max_ah.back() >
        cfg.nominal_capacity_ah * cfg.fade_floor);
}

TEST_CASE("noise-free cycles satisfy the physical identities") {
  SynthConfig cfg = clean_config();
  SynthBattery b = generate_battery(cfg);
  const RawCycle& rc = b.cycles[5];
  const double q_max = b.truth.q_max_ah[5];

  const double r_ohm = cfg.internal_resistance_ohm;  // 25 degC, no correction
  for (const RawSample& s : rc.samples) {
    REQUIRE(s.soc_pct.has_value());
    const double soc_frac = *s.soc_pct / 100.0;
    // Discharged charge and SoC are two views of one state.
    CHECK(s.q_discharged_ah ==
          doctest::Approx((1.0 - soc_frac) * q_max).epsilon(1e-12));
    // Terminal voltage = OCV affine map minus ohmic drop (current sign:
    // discharge positive drops the voltage, charge negative raises it).
    const double v_expected = cfg.voltage_base_v +
                              cfg.voltage_slope_v * soc_frac -
                              s.current_a * r_ohm;
    CHECK(s.voltage_v == doctest::Approx(v_expected).epsilon(1e-12));
    CHECK(s.temperature_c == 25.0);
  }

  // Phase structure: charge first (negative current), discharge last
  // (positive), SoC rises then falls, ending empty.
  CHECK(rc.samples.front().current_a < 0.0);
  CHECK(rc.samples.back().current_a > 0.0);
  CHECK(*rc.samples.front().soc_pct == 0.0);
  CHECK(*rc.samples.back().soc_pct == doctest::Approx(0.0).epsilon(1e-9));
  double peak = 0.0;
  for (const RawSample& s : rc.samples) peak = std::max(peak, *s.soc_pct);
  CHECK(peak > 95.0);  // CV phase runs 4 time constants, ~98% of the gap

  // Coulomb counting: dq_d/dt == I(t) away from phase switches. Verify with
  // central differences over the emitted samples.
  int checked = 0;
  for (std::size_t i = 1; i + 1 < rc.samples.size(); ++i) {
    const RawSample& prev = rc.samples[i - 1];
    const RawSample& next = rc.samples[i + 1];
    const RawSample& cur = rc.samples[i];
    // Skip windows whose current jumps (phase boundary inside the stencil).
    if (std::abs(next.current_a - prev.current_a) > 0.2) continue;
    const double dt_h = (next.t_s - prev.t_s) / 3600.0;
    const double dq = (next.q_discharged_ah - prev.q_discharged_ah) / dt_h;
    CHECK(dq == doctest::Approx(cur.current_a).epsilon(5e-2));
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("temperature shifts both the voltage map and the fade rate") {
  SynthConfig hot = clean_config();
  hot.temperature_c = 45.0;
  SynthBattery bh = generate_battery(hot);
  SynthBattery bc = generate_battery(clean_config());

  // Hotter cell fades faster.
  CHECK(bh.truth.q_max_ah.back() < bc.truth.q_max_ah.back());

  // Voltage picks up the additive offset and the resistance correction.
  const RawSample& s = bh.cycles[0].samples[3];
  const double r_ohm = hot.internal_resistance_ohm *
                       (1.0 + hot.resistance_temp_coeff * 20.0);
  const double v_expected = hot.voltage_base_v +
                            hot.voltage_slope_v * (*s.soc_pct / 100.0) -
                            s.current_a * r_ohm +
                            hot.voltage_temp_coeff_v * 20.0;
  CHECK(s.voltage_v == doctest::Approx(v_expected).epsilon(1e-12));
}

TEST_CASE("generation is deterministic in the seed, bytes included") {
  SynthConfig cfg;  // noisy on purpose: determinism must cover the rng path
  cfg.n_cycles = 3;
  cfg.samples_per_cycle = 32;
  SynthBattery a = generate_battery(cfg);
  SynthBattery b = generate_battery(cfg);
  CHECK(cycles_to_csv(a) == cycles_to_csv(b));
  CHECK(truth_to_csv(a) == truth_to_csv(b));

  cfg.seed = 43;
  SynthBattery c = generate_battery(cfg);
  CHECK(cycles_to_csv(a) != cycles_to_csv(c));
  // Noise never lands on the targets.
  CHECK(truth_to_csv(a) == truth_to_csv(c));
  for (std::size_t i = 0; i < a.cycles[0].samples.size(); ++i) {
    CHECK(a.cycles[0].samples[i].q_discharged_ah ==
          c.cycles[0].samples[i].q_discharged_ah);
    CHECK(*a.cycles[0].samples[i].soc_pct == *c.cycles[0].samples[i].soc_pct);
  }
}

TEST_CASE("noise lands on observed channels at the configured scale") {
  SynthConfig noisy = clean_config();
  noisy.n_cycles = 6;
  noisy.samples_per_cycle = 180;
  noisy.noise_voltage_v = 0.003;
  SynthBattery clean = generate_battery(clean_config());
  // Re-generate the clean battery at the noisy sample count for alignment.
  SynthConfig clean_cfg = clean_config();
  clean_cfg.n_cycles = 6;
  clean_cfg.samples_per_cycle = 180;
  clean = generate_battery(clean_cfg);
  SynthBattery b = generate_battery(noisy);

  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t i = 0; i < 180; ++i) {
      const double r = b.cycles[c].samples[i].voltage_v -
                       clean.cycles[c].samples[i].voltage_v;
      sum += r;
      sum2 += r * r;
      ++n;
    }
  const double mean = sum / n;
  const double std = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean) < 5e-4);
  CHECK(std == doctest::Approx(0.003).epsilon(0.15));
}

TEST_CASE("fleet shifts move exactly one generating condition") {
  FleetConfig fc;
  fc.base = clean_config();
  fc.cycles_per_battery = 4;

  fc.shift = FleetShift::kTemperature;
  std::vector<SynthBattery> fleet = generate_fleet(fc);
  REQUIRE(fleet.size() == 3);
  CHECK(fleet[0].meta.battery_id == "B-1");
  CHECK(fleet[2].meta.battery_id == "B-3");
  CHECK(fleet[0].meta.temperature_c == 25.0);
  CHECK(fleet[1].meta.temperature_c == 35.0);
  CHECK(fleet[2].meta.temperature_c == 45.0);
  for (const auto& b : fleet) {
    CHECK(b.cycles.size() == 4);
    CHECK(b.meta.charge_c_rate == fc.base.charge_c_rate);
  }
  // Battery-specific seeds: the sources differ from each other.
  CHECK(cycles_to_csv(fleet[0]) != cycles_to_csv(fleet[1]));

  fc.shift = FleetShift::kChargeRate;
  fleet = generate_fleet(fc);
  CHECK(fleet[0].meta.charge_c_rate == 0.25);
  CHECK(fleet[1].meta.charge_c_rate == 0.5);
  CHECK(fleet[2].meta.charge_c_rate == 1.0);
  for (const auto& b : fleet) CHECK(b.meta.temperature_c == 25.0);

  fc.shift = FleetShift::kChemistry;
  fleet = generate_fleet(fc);
  CHECK(fleet[0].meta.chemistry == "NCA");
  CHECK(fleet[2].meta.chemistry == "NMC");
  CHECK(fleet[0].meta.nominal_capacity_ah == 3.4);
  CHECK(fleet[1].meta.nominal_capacity_ah == 2.5);
  CHECK(fleet[2].meta.nominal_capacity_ah == 3.5);

  // Fleet generation is deterministic as a whole.
  std::vector<SynthBattery> again = generate_fleet(fc);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(cycles_to_csv(fleet[i]) == cycles_to_csv(again[i]));
}

TEST_CASE("written files parse back into the same cycles") {
  const std::string dir = "./kfno_test_synth_tmp";
  SynthConfig cfg;
  cfg.battery_id = "CELL-7";
  cfg.n_cycles = 3;
  cfg.samples_per_cycle = 24;
  SynthBattery b = generate_battery(cfg);
  write_battery_files(b, dir);

  CHECK(std::filesystem::exists(dir + "/CELL-7_cycles.csv"));
  CHECK(std::filesystem::exists(dir + "/CELL-7_meta.json"));
  CHECK(std::filesystem::exists(dir + "/CELL-7_truth.csv"));

  std::vector<RawCycle> parsed = parse_cycles(dir + "/CELL-7_cycles.csv");
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0].battery_id == "CELL-7");
  CHECK(parsed[0].samples.size() == 24);
  // Shortest-roundtrip formatting preserves every double exactly.
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(parsed[c].q_max_ah == b.cycles[c].q_max_ah);
    for (std::size_t i = 0; i < parsed[c].samples.size(); ++i) {
      CHECK(parsed[c].samples[i].t_s == b.cycles[c].samples[i].t_s);
      CHECK(parsed[c].samples[i].voltage_v == b.cycles[c].samples[i].voltage_v);
      CHECK(*parsed[c].samples[i].soc_pct == *b.cycles[c].samples[i].soc_pct);
    }
  }
  BatteryMeta meta = parse_battery_meta(dir + "/CELL-7_meta.json");
  CHECK(meta.battery_id == "CELL-7");
  CHECK(meta.nominal_capacity_ah == cfg.nominal_capacity_ah);

  // And the parsed cycles resample cleanly.
  ResampledCycle rc = resample_cycle(parsed[0], 45);
  CHECK(rc.t_s.size() == 45);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration validation refuses nonsense") {
  SynthConfig cfg;
  cfg.n_cycles = 0;
  CHECK_THROWS_AS(generate_battery(cfg), Error);
  cfg = SynthConfig{};
  cfg.fade_floor = 0.0;
  CHECK_THROWS_AS(generate_battery(cfg), Error);
  cfg = SynthConfig{};
  cfg.cv_switch_soc = 1.0;
  CHECK_THROWS_AS(generate_battery(cfg), Error);
  cfg = SynthConfig{};
  cfg.samples_per_cycle = 4;
  CHECK_THROWS_AS(generate_battery(cfg), Error);
  cfg = SynthConfig{};
  cfg.noise_voltage_v = -0.1;
  CHECK_THROWS_AS(generate_battery(cfg), Error);
}
