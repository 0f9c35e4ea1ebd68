/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kfno {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_num(const std::string& s, std::size_t line_no, const std::string& col) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw Error("cycle CSV line " + std::to_string(line_no) + ": cannot parse '" +
                s + "' as a number in column " + col);
  }
  return v;
}

long parse_long(const std::string& s, std::size_t line_no, const std::string& col) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error("cycle CSV line " + std::to_string(line_no) + ": cannot parse '" +
                s + "' as an integer in column " + col);
  }
  return v;
}

struct PendingCycle {
  std::vector<RawSample> samples;
  std::vector<double> q_max_values;  // one per row that supplied it
};

}  // namespace

std::vector<RawCycle> parse_cycles_text(const std::string& csv_text,
                                        const std::string& origin) {
  std::istringstream in(csv_text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)),
          origin + ": empty file (missing header)");
  std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> required = {
      "battery_id",      "cycle_index",   "t_s",
      "voltage_v",       "current_a",     "temperature_c",
      "q_discharged_ah"};
  require(header.size() >= required.size(), origin + ": header too short");
  for (std::size_t i = 0; i < required.size(); ++i) {
    require(header[i] == required[i],
            origin + ": header column " + std::to_string(i + 1) + " is '" +
                header[i] + "', expected '" + required[i] + "'");
  }
  int qmax_col = -1;
  int soc_col = -1;
  for (std::size_t i = required.size(); i < header.size(); ++i) {
    if (header[i] == "q_max_ah") {
      qmax_col = static_cast<int>(i);
    } else if (header[i] == "soc_pct") {
      soc_col = static_cast<int>(i);
    } else {
      throw Error(origin + ": unknown header column '" + header[i] + "'");
    }
  }

  std::map<std::pair<std::string, long>, PendingCycle> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw Error(origin + " line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(f.size()));
    }
    RawSample s;
    const std::string& id = f[0];
    require(!id.empty(),
            origin + " line " + std::to_string(line_no) + ": empty battery_id");
    const long cyc = parse_long(f[1], line_no, "cycle_index");
    s.t_s = parse_num(f[2], line_no, "t_s");
    s.voltage_v = parse_num(f[3], line_no, "voltage_v");
    s.current_a = parse_num(f[4], line_no, "current_a");
    s.temperature_c = parse_num(f[5], line_no, "temperature_c");
    s.q_discharged_ah = parse_num(f[6], line_no, "q_discharged_ah");
    PendingCycle& pc = groups[{id, cyc}];
    if (qmax_col >= 0 && !f[static_cast<std::size_t>(qmax_col)].empty()) {
      pc.q_max_values.push_back(
          parse_num(f[static_cast<std::size_t>(qmax_col)], line_no, "q_max_ah"));
    }
    if (soc_col >= 0 && !f[static_cast<std::size_t>(soc_col)].empty()) {
      s.soc_pct = parse_num(f[static_cast<std::size_t>(soc_col)], line_no, "soc_pct");
    }
    pc.samples.push_back(s);
  }

  std::vector<RawCycle> cycles;
  cycles.reserve(groups.size());
  for (auto& [key, pc] : groups) {
    RawCycle rc;
    rc.battery_id = key.first;
    rc.cycle_index = key.second;
    std::stable_sort(pc.samples.begin(), pc.samples.end(),
                     [](const RawSample& a, const RawSample& b) { return a.t_s < b.t_s; });
    for (std::size_t i = 1; i < pc.samples.size(); ++i) {
      if (!(pc.samples[i].t_s > pc.samples[i - 1].t_s)) {
        throw Error(origin + ": battery '" + rc.battery_id + "' cycle " +
                    std::to_string(rc.cycle_index) +
                    ": non-monotone time (duplicate or out-of-order t_s = " +
                    format_double(pc.samples[i].t_s) + ")");
      }
    }
    if (!pc.q_max_values.empty()) {
      if (pc.q_max_values.size() != pc.samples.size()) {
        throw Error(origin + ": battery '" + rc.battery_id + "' cycle " +
                    std::to_string(rc.cycle_index) +
                    ": q_max_ah must be given on every row of the cycle or none");
      }
      const double q0 = pc.q_max_values.front();
      for (double qv : pc.q_max_values) {
        if (std::abs(qv - q0) > 1e-9 * std::max(1.0, std::abs(q0))) {
          throw Error(origin + ": battery '" + rc.battery_id + "' cycle " +
                      std::to_string(rc.cycle_index) +
                      ": q_max_ah varies within the cycle");
        }
      }
      rc.q_max_ah = q0;
    } else {
      double qm = 0.0;
      for (const RawSample& s : pc.samples) qm = std::max(qm, s.q_discharged_ah);
      rc.q_max_ah = qm;
    }
    require(rc.q_max_ah > 0.0, origin + ": battery '" + rc.battery_id + "' cycle " +
                                   std::to_string(rc.cycle_index) +
                                   ": non-positive cycle capacity");
    rc.samples = std::move(pc.samples);
    cycles.push_back(std::move(rc));
  }
  // Map iteration already yields (battery_id, cycle_index) order.
  return cycles;
}

std::vector<RawCycle> parse_cycles(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  require(in.good(), "cannot open cycle CSV: " + csv_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cycles_text(ss.str(), csv_path);
}

BatteryMeta parse_battery_meta(const std::string& json_path) {
  std::ifstream in(json_path);
  require(in.good(), "cannot open battery metadata: " + json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("battery metadata " + json_path + ": " + e.what());
  }
  BatteryMeta m;
  try {
    m.battery_id = j.at("battery_id").get<std::string>();
    m.chemistry = j.at("chemistry").get<std::string>();
    m.charge_c_rate = j.at("charge_c_rate").get<double>();
    m.discharge_c_rate = j.at("discharge_c_rate").get<double>();
    m.temperature_c = j.at("temperature_c").get<double>();
    m.nominal_capacity_ah = j.at("nominal_capacity_ah").get<double>();
    m.nominal_voltage_v = j.at("nominal_voltage_v").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("battery metadata " + json_path + ": " + e.what());
  }
  require(m.nominal_capacity_ah > 0.0,
          "battery metadata " + json_path + ": nominal_capacity_ah must be positive");
  return m;
}

double soc_from_discharge(double q_discharged_ah, double q_max_ah) {
  require(q_max_ah > 0.0, "soc_from_discharge: q_max must be positive, got " +
                              format_double(q_max_ah));
  require(q_discharged_ah >= 0.0,
          "soc_from_discharge: discharged charge must be non-negative, got " +
              format_double(q_discharged_ah));
  const double soc = (1.0 - q_discharged_ah / q_max_ah) * 100.0;
  return std::min(100.0, std::max(0.0, soc));
}

double soh_pct(double q_max_ah, double q_nominal_ah) {
  require(q_nominal_ah > 0.0, "soh_pct: nominal capacity must be positive");
  return 100.0 * q_max_ah / q_nominal_ah;
}

ResampledCycle resample_cycle(const RawCycle& raw, Index n_c) {
  require(n_c >= 2, "resample_cycle: need at least 2 grid points");
  require(raw.samples.size() >= 2,
          "resample_cycle: battery '" + raw.battery_id + "' cycle " +
              std::to_string(raw.cycle_index) + " has fewer than 2 samples");
  const bool has_soc = raw.samples.front().soc_pct.has_value();
  for (const RawSample& s : raw.samples) {
    require(s.soc_pct.has_value() == has_soc,
            "resample_cycle: battery '" + raw.battery_id + "' cycle " +
                std::to_string(raw.cycle_index) +
                ": soc_pct must be present on all samples or none");
  }

  ResampledCycle out;
  out.battery_id = raw.battery_id;
  out.cycle_index = raw.cycle_index;
  out.q_max_ah = raw.q_max_ah;
  out.t_s.resize(n_c);
  out.grid.resize(n_c, 3);
  out.soc_pct.resize(n_c);

  const double t0 = raw.samples.front().t_s;
  const double t1 = raw.samples.back().t_s;
  const std::size_t n_raw = raw.samples.size();
  std::size_t seg = 0;
  for (Index i = 0; i < n_c; ++i) {
    double t;
    if (i == 0) {
      t = t0;
    } else if (i == n_c - 1) {
      t = t1;  // exact endpoint, no rounding drift
    } else {
      t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n_c - 1);
    }
    while (seg + 2 < n_raw && raw.samples[seg + 1].t_s < t) ++seg;
    const RawSample& a = raw.samples[seg];
    const RawSample& b = raw.samples[seg + 1];
    // Endpoints are copied verbatim so no interpolation rounding creeps in.
    const RawSample* exact = nullptr;
    if (i == 0) exact = &a;
    if (i == n_c - 1) exact = &b;
    double v, cur, temp, qd;
    std::optional<double> soc_raw;
    if (exact != nullptr) {
      v = exact->voltage_v;
      cur = exact->current_a;
      temp = exact->temperature_c;
      qd = exact->q_discharged_ah;
      soc_raw = exact->soc_pct;
    } else {
      const double w = (t - a.t_s) / (b.t_s - a.t_s);
      v = a.voltage_v + w * (b.voltage_v - a.voltage_v);
      cur = a.current_a + w * (b.current_a - a.current_a);
      temp = a.temperature_c + w * (b.temperature_c - a.temperature_c);
      qd = a.q_discharged_ah + w * (b.q_discharged_ah - a.q_discharged_ah);
      if (has_soc) soc_raw = *a.soc_pct + w * (*b.soc_pct - *a.soc_pct);
    }
    out.t_s(i) = t;
    out.grid(i, 0) = v;
    out.grid(i, 1) = cur;
    out.grid(i, 2) = temp;
    if (has_soc) {
      out.soc_pct(i) = std::min(100.0, std::max(0.0, *soc_raw));
    } else {
      out.soc_pct(i) = soc_from_discharge(std::max(0.0, qd), raw.q_max_ah);
    }
  }
  return out;
}

namespace {

struct MinMax {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(const std::string& channel) {
    require(std::isfinite(lo) && std::isfinite(hi),
            "fit_scaler: channel '" + channel + "' has non-finite values");
    require(hi > lo, "fit_scaler: channel '" + channel +
                         "' is constant over the training data; min-max "
                         "scaling is undefined");
  }
};

inline double apply_minmax(double v, double lo, double hi) {
  return (v - lo) / (hi - lo);
}

inline double invert_minmax(double v, double lo, double hi) {
  return v * (hi - lo) + lo;
}

}  // namespace

ScalerState fit_scaler(const std::vector<ResampledCycle>& train_cycles) {
  require(!train_cycles.empty(), "fit_scaler: no training cycles");
  MinMax v, i, t, q, soc;
  for (const ResampledCycle& rc : train_cycles) {
    for (Index r = 0; r < rc.grid.rows(); ++r) {
      v.add(rc.grid(r, 0));
      i.add(rc.grid(r, 1));
      t.add(rc.grid(r, 2));
      soc.add(rc.soc_pct(r));
    }
    q.add(rc.q_max_ah);
  }
  v.finish("voltage_v");
  i.finish("current_a");
  t.finish("temperature_c");
  q.finish("q_max_ah");
  soc.finish("soc_pct");
  ScalerState s;
  s.v_min = v.lo; s.v_max = v.hi;
  s.i_min = i.lo; s.i_max = i.hi;
  s.t_min = t.lo; s.t_max = t.hi;
  s.q_min = q.lo; s.q_max = q.hi;
  s.soc_min = soc.lo; s.soc_max = soc.hi;
  return s;
}

Cycle apply_scaler(const ResampledCycle& rc, const ScalerState& s) {
  Cycle c;
  c.battery_id = rc.battery_id;
  c.cycle_index = rc.cycle_index;
  c.q_max_ah = rc.q_max_ah;
  c.soc_pct = rc.soc_pct;
  c.t_s = rc.t_s;
  const Index n = rc.grid.rows();
  c.grid.resize(n, 3);
  c.soc_scaled.resize(n);
  for (Index r = 0; r < n; ++r) {
    c.grid(r, 0) = apply_minmax(rc.grid(r, 0), s.v_min, s.v_max);
    c.grid(r, 1) = apply_minmax(rc.grid(r, 1), s.i_min, s.i_max);
    c.grid(r, 2) = apply_minmax(rc.grid(r, 2), s.t_min, s.t_max);
    c.soc_scaled(r) = apply_minmax(rc.soc_pct(r), s.soc_min, s.soc_max);
  }
  c.u_bar = c.grid.colwise().mean().transpose();
  c.q_scaled = apply_minmax(rc.q_max_ah, s.q_min, s.q_max);
  return c;
}

double scale_qmax(double q_ah, const ScalerState& s) {
  return apply_minmax(q_ah, s.q_min, s.q_max);
}

double unscale_qmax(double q_scaled, const ScalerState& s) {
  return invert_minmax(q_scaled, s.q_min, s.q_max);
}

double scale_soc(double soc_pct_v, const ScalerState& s) {
  return apply_minmax(soc_pct_v, s.soc_min, s.soc_max);
}

double unscale_soc(double soc_scaled, const ScalerState& s) {
  return invert_minmax(soc_scaled, s.soc_min, s.soc_max);
}

ContiguousSplit contiguous_split(const std::vector<ResampledCycle>& cycles,
                                 double test_fraction) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "contiguous_split: test fraction must lie in (0, 1)");
  const std::size_t n = cycles.size();
  require(n >= 2, "contiguous_split: need at least 2 cycles");
  const auto n_test = static_cast<std::size_t>(
      std::ceil(test_fraction * static_cast<double>(n)));
  require(n_test >= 1 && n_test < n,
          "contiguous_split: split leaves an empty side (n=" + std::to_string(n) +
              ", test=" + std::to_string(n_test) + ")");
  ContiguousSplit out;
  out.train.assign(cycles.begin(), cycles.begin() + static_cast<long>(n - n_test));
  out.test.assign(cycles.begin() + static_cast<long>(n - n_test), cycles.end());
  return out;
}

FewShotSelection fewshot_select(const std::vector<ResampledCycle>& cycles,
                                double k) {
  require(k >= 0.0 && k < 1.0, "fewshot_select: k must lie in [0, 1)");
  require(!cycles.empty(), "fewshot_select: no cycles");
  const auto n = static_cast<double>(cycles.size());
  const auto n_support = static_cast<std::size_t>(std::ceil(k * n));
  require(n_support < cycles.size(),
          "fewshot_select: support set would swallow every cycle");
  FewShotSelection out;
  out.support.assign(cycles.begin(), cycles.begin() + static_cast<long>(n_support));
  out.eval.assign(cycles.begin() + static_cast<long>(n_support), cycles.end());
  return out;
}

}  // namespace kfno
