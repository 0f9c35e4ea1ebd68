/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Acceptance gate: eight end-to-end checks of the estimator, run as a plain
 * binary without a test framework. Every check prints one [PASS]/[FAIL] line
 * with its measured numbers and wall time; the exit status is the number of
 * failed checks, so the gate reads cleanly in a terminal and still integrates
 * with ctest. Checks with a stated time budget fail when they exceed it.
 */

#include <nlohmann/json.hpp>

#include <chrono>
#include <complex>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "core/grad_check.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"

using namespace kfno;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

fs::path g_root;  // scratch directory for generated datasets

// The first default-config training run is kept so the determinism check can
// compare a from-scratch rerun against it byte for byte.
struct FirstRunArtifacts {
  bool available = false;
  std::string checkpoint_json;
  std::string metrics_json;
};
FirstRunArtifacts g_first_run;

/* --- 1. latent operator stability projection -------------------------------- */

bool check_stability_projection(std::string& detail) {
  Rng rng(20260818);
  const double rho_max = 1.0;
  const Index sizes[3] = {8, 16, 32};

  double worst_rho = 0.0;    // spectral radius after projection
  double worst_idem = 0.0;   // elementwise change under a second projection
  double worst_eig = 0.0;    // eigenvalue distance from the radial shrink
  double worst_angle = 0.0;  // eigenvector angle before vs after

  for (int trial = 0; trial < 100; ++trial) {
    const Index n = sizes[trial % 3];
    const double target = rng.uniform(0.5, 2.0);
    Matrix a(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) a(r, c) = rng.normal();
    const double rho0 = spectrum(a).rho;
    if (!(rho0 > 0.0)) {
      detail = "degenerate random matrix (zero spectral radius)";
      return false;
    }
    a *= target / rho0;  // known starting radius in [0.5, 2)

    const EigenPair before = eig(a);
    const ClipResult clip = spectral_clip(a, rho_max);
    worst_rho = std::max(worst_rho, spectrum(clip.k).rho);

    const ClipResult again = spectral_clip(clip.k, rho_max);
    worst_idem =
        std::max(worst_idem, (again.k - clip.k).cwiseAbs().maxCoeff());

    // Each eigenvalue must be shrunk radially (phase kept) and keep its
    // eigenspace. Distinct eigenvalues can merge under the shrink (two real
    // ones beyond the bound both land exactly on rho_max), and individual
    // eigenvectors of a multiple eigenvalue are not unique — so expected
    // values are clustered and each cluster is compared as a subspace via
    // its largest principal angle.
    const EigenPair after = eig(clip.k);
    std::vector<std::complex<double>> want(static_cast<std::size_t>(n));
    for (Index e = 0; e < n; ++e) {
      const std::complex<double> lam = before.values(e);
      const double mod = std::abs(lam);
      want[static_cast<std::size_t>(e)] =
          mod > rho_max ? lam * (rho_max / mod) : lam;
    }
    std::vector<std::vector<Index>> clusters;
    for (Index e = 0; e < n; ++e) {
      bool placed = false;
      for (auto& cl : clusters) {
        if (std::abs(want[static_cast<std::size_t>(e)] -
                     want[static_cast<std::size_t>(cl.front())]) < 1e-6) {
          cl.push_back(e);
          placed = true;
          break;
        }
      }
      if (!placed) clusters.push_back({e});
    }
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (const std::vector<Index>& cl : clusters) {
      const Index m = static_cast<Index>(cl.size());
      ComplexMatrix v_before(n, m);
      ComplexMatrix v_after(n, m);
      for (Index t = 0; t < m; ++t) {
        const Index e = cl[static_cast<std::size_t>(t)];
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
          if (used[static_cast<std::size_t>(j)]) continue;
          const double d = std::abs(after.values(j) -
                                    want[static_cast<std::size_t>(e)]);
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
        used[static_cast<std::size_t>(best)] = true;
        worst_eig = std::max(worst_eig, best_d);
        v_before.col(t) = before.vectors.col(e);
        v_after.col(t) = after.vectors.col(best);
      }
      // Largest principal angle: acos of the smallest singular value of
      // Q_before^H Q_after with both bases orthonormalised.
      const ComplexMatrix q_before =
          Eigen::HouseholderQR<ComplexMatrix>(v_before).householderQ() *
          ComplexMatrix::Identity(n, m);
      const ComplexMatrix q_after =
          Eigen::HouseholderQR<ComplexMatrix>(v_after).householderQ() *
          ComplexMatrix::Identity(n, m);
      const Eigen::JacobiSVD<ComplexMatrix> svd(q_before.adjoint() * q_after);
      const double cos_worst = svd.singularValues().minCoeff();
      worst_angle =
          std::max(worst_angle, std::acos(std::min(1.0, cos_worst)));
    }
  }

  const bool ok = worst_rho <= rho_max + 1e-9 && worst_idem <= 1e-9 &&
                  worst_eig <= 1e-8 && worst_angle < 1e-6;
  detail = "100 random operators (8/16/32 dim, radius 0.5-2): worst radius "
           "after projection " + num(worst_rho, 12) + " (bound 1+1e-9), "
           "reprojection change " + num(worst_idem, 3) + " (<=1e-9), eigenvalue "
           "shift " + num(worst_eig, 3) + " (<=1e-8), eigenspace principal "
           "angle " + num(worst_angle, 3) + " rad (<1e-6)";
  return ok;
}

/* --- 2. joint analytic gradients vs finite differences ----------------------- */

bool check_joint_gradients(std::string& detail) {
  RunConfig cfg;
  cfg.n_c = 16;
  cfg.koopman.latent_dim = 8;
  cfg.koopman.encoder_hidden = {8};
  cfg.koopman.decoder_hidden = {8};
  cfg.fno.modes = 4;
  cfg.fno.layer_count = 2;
  cfg.fno.hidden_channels = 8;
  cfg.fno.lift_channels = 8;

  // One consecutive-cycle example off the generator, scaled like the trainer.
  SynthConfig sc = cfg.synth;
  sc.n_cycles = 2;
  sc.samples_per_cycle = 40;
  sc.battery_id = "GC-1";
  sc.seed = 11;
  SynthBattery b = generate_battery(sc);
  std::vector<ResampledCycle> rcs;
  for (const RawCycle& rc : b.cycles) rcs.push_back(resample_cycle(rc, cfg.n_c));
  const ScalerState scaler = fit_scaler(rcs);
  std::vector<Cycle> cycles;
  for (const ResampledCycle& rc : rcs) cycles.push_back(apply_scaler(rc, scaler));

  PairSample pair;
  pair.q_cur = cycles[0].q_scaled;
  pair.q_next = cycles[1].q_scaled;
  pair.u_bar_cur = cycles[0].u_bar;
  pair.grid_next = &cycles[1].grid;
  pair.soc_next = &cycles[1].soc_scaled;
  const std::vector<PairSample> batch = {pair};
  const std::vector<double> weights = {1.0};

  Rng rng(3);
  KoopmanModel koop = KoopmanModel::create(cfg.koopman, rng);
  FnoModel fno = FnoModel::create(cfg.fno, rng);

  std::vector<ParamBlock> blocks = koop.param_blocks();
  for (ParamBlock& blk : fno.param_blocks()) blocks.push_back(blk);
  const ParamLayout layout = layout_of(blocks);

  const bool coupled = true;  // capacity forecast feeds the SoC head
  LossAndGradFn f = [&](const Vector& theta, Vector* grad) {
    unflatten(theta, blocks);
    if (grad == nullptr) {
      return joint_loss(koop, fno, batch, weights, cfg.loss_weights,
                        cfg.huber_delta, coupled)
          .total;
    }
    KoopmanModel kg = koopman_zeros_like(koop);
    FnoModel fg = fno_zeros_like(fno);
    const LossBreakdown parts =
        joint_loss_grad(koop, fno, batch, weights, cfg.loss_weights,
                        cfg.huber_delta, coupled, kg, fg);
    std::vector<ParamBlock> gb = kg.param_blocks();
    for (ParamBlock& blk : fg.param_blocks()) gb.push_back(blk);
    *grad = flatten(gb);
    return parts.total;
  };

  const Vector theta0 = flatten(blocks);
  Rng probe_rng(17);
  std::vector<Index> probes =
      random_probes(static_cast<Index>(layout.total), 220, probe_rng);
  std::size_t off = 0;  // plus the first coordinate of every named block
  for (const auto& [name, size] : layout.blocks) {
    probes.push_back(static_cast<Index>(off));
    off += size;
  }

  const GradCheckResult r = grad_check(f, theta0, probes, 1e-4);
  const bool ok = r.max_rel_err < 1e-4;
  detail = "full coupled model, " + std::to_string(layout.total) +
           " parameters, " + std::to_string(probes.size()) +
           " probed coordinates (220 random + every block): max rel err " +
           num(r.max_rel_err, 3) + " (<1e-4), worst block " +
           layout.block_of(static_cast<std::size_t>(r.worst_index));
  return ok;
}

/* --- 3. operator resolution transfer ----------------------------------------- */

bool check_resolution_transfer(std::string& detail) {
  FnoConfig fc;
  fc.modes = 8;
  fc.layer_count = 2;
  fc.hidden_channels = 16;
  fc.lift_channels = 16;
  Rng rng(314159);
  const FnoModel m = FnoModel::create(fc, rng);

  // Band-limited 4-channel input: harmonics 0..10 with small amplitudes, so
  // the same continuous signal is sampled exactly at both grid lengths.
  SpectrumCoeffs coeffs;
  coeffs.coeffs = ComplexMatrix::Zero(11, 4);
  for (Index k = 0; k < 11; ++k)
    for (Index c = 0; c < 4; ++c) {
      const double re = rng.uniform(-0.05, 0.05);
      const double im = k == 0 ? 0.0 : rng.uniform(-0.05, 0.05);
      coeffs.coeffs(k, c) = std::complex<double>(re, im);
    }
  const Matrix x45 = irfft_pad(coeffs, 45);
  const Matrix x90 = irfft_pad(coeffs, 90);

  double grid_diff = 0.0;  // sanity: the coarse grid is a subset of the fine
  for (Index t = 0; t < 45; ++t)
    grid_diff = std::max(
        grid_diff, (x90.row(2 * t) - x45.row(t)).cwiseAbs().maxCoeff());

  const Matrix y45 = fno_forward(m, x45);
  const Matrix y90 = fno_forward(m, x90);
  double worst = 0.0;
  for (Index t = 0; t < 45; ++t)
    worst = std::max(worst, std::abs(y90(2 * t, 0) - y45(t, 0)));

  const bool ok = grid_diff <= 1e-12 && worst < 1e-6;
  detail = "seeded operator (8 modes) on one band-limited signal at 45 and 90 "
           "points: shared-point input mismatch " + num(grid_diff, 3) +
           ", output disagreement " + num(worst, 3) + " (<1e-6)";
  return ok;
}

/* --- 4. Adam/AdamW equivalence and step decay --------------------------------- */

bool check_optimizer_equivalence(std::string& detail) {
  const Index dim = 64;
  Rng rng(99);
  Vector theta0(dim);
  for (Index i = 0; i < dim; ++i) theta0(i) = rng.normal();

  Vector ta = theta0;  // adam
  Vector tw = theta0;  // adamw with zero decay
  OptimState sa = OptimState::create(dim);
  OptimState sw = OptimState::create(dim);
  OptimConfig oc;  // weight_decay defaults to 0

  // Independent scalar reference: the textbook recurrences, plain doubles.
  const double b1 = oc.beta1, b2 = oc.beta2, eps = oc.eps;
  std::vector<double> ref(static_cast<std::size_t>(dim));
  std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  for (Index i = 0; i < dim; ++i) ref[static_cast<std::size_t>(i)] = theta0(i);

  const double lr0 = 1e-3;
  bool bitwise = true;
  double worst_ref = 0.0;
  for (int step = 0; step < 100; ++step) {
    Vector g(dim);
    for (Index i = 0; i < dim; ++i) g(i) = rng.uniform(-1.0, 1.0);
    const double lr = lr_at(step, lr0, 30, 0.5);  // decays inside the run
    adam_step(ta, g, sa, oc, lr);
    adamw_step(tw, g, sw, oc, lr);
    if (!(ta.array() == tw.array()).all()) bitwise = false;

    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step + 1));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step + 1));
    for (Index i = 0; i < dim; ++i) {
      const std::size_t s = static_cast<std::size_t>(i);
      m[s] = b1 * m[s] + (1.0 - b1) * g(i);
      v[s] = b2 * v[s] + (1.0 - b2) * g(i) * g(i);
      ref[s] -= lr * (m[s] / bc1) / (std::sqrt(v[s] / bc2) + eps);
      worst_ref = std::max(worst_ref, std::abs(ta(i) - ref[s]));
    }
  }

  bool sched_ok = true;
  for (const double a0 : {1e-4, 5e-4, 1e-3}) {
    sched_ok = sched_ok && lr_at(0, a0, 30, 0.5) == a0 &&
               lr_at(29, a0, 30, 0.5) == a0 &&
               lr_at(30, a0, 30, 0.5) == a0 * 0.5 &&
               lr_at(59, a0, 30, 0.5) == a0 * 0.5 &&
               lr_at(60, a0, 30, 0.5) == a0 * 0.25 &&
               lr_at(89, a0, 30, 0.5) == a0 * 0.25;
  }

  const bool ok = bitwise && worst_ref <= 1e-14 && sched_ok;
  detail = std::string("100 scheduled steps on 64 parameters: AdamW(decay 0) ") +
           (bitwise ? "bit-identical to Adam" : "DIVERGED from Adam") +
           ", scalar-reference gap " + num(worst_ref, 3) + " (<=1e-14), " +
           "step decay at epoch 60 = base/4 " + (sched_ok ? "exact" : "WRONG");
  return ok;
}

/* --- 5. default synthetic run accuracy ----------------------------------------- */

bool check_end_to_end(std::string& detail) {
  const fs::path dir = g_root / "default_battery";
  fs::create_directories(dir);
  RunConfig cfg;  // stock defaults: 90-point grid, coupled pathways
  write_battery_files(generate_battery(cfg.synth), dir.string());
  const std::vector<LoadedBattery> bats = load_batteries(dir.string(), cfg.n_c);

  const auto t0 = Clock::now();
  const TrainedBundle bundle = run_training(bats, cfg);
  const double train_s = seconds_since(t0);
  const EvalOutput ev = evaluate_contiguous(bundle, bats, false);

  double worst_rho = 0.0;
  for (const EpochRecord& e : bundle.history)
    worst_rho = std::max(worst_rho, e.rho);

  RunConfig dcfg = cfg;
  dcfg.coupled = false;
  const TrainedBundle dbundle = run_training(bats, dcfg);
  const EvalOutput dev = evaluate_contiguous(dbundle, bats, false);

  g_first_run.available = true;
  g_first_run.checkpoint_json = checkpoint_to_json(bundle);
  g_first_run.metrics_json = metrics_to_json(ev.metrics);

  const bool ok = ev.metrics.qmax_rmse_ah < 0.01 &&
                  ev.metrics.soc_rmse_pct < 2.0 && train_s < 900.0 &&
                  worst_rho <= 1.0 + 1e-9 &&
                  dev.metrics.soc_rmse_pct <= ev.metrics.soc_rmse_pct + 0.5;
  detail = "held-out quarter of the default battery: capacity one-step RMSE " +
           num(ev.metrics.qmax_rmse_ah) + " Ah (<0.01), SoC RMSE " +
           num(ev.metrics.soc_rmse_pct) + "% (<2), decoupled SoC RMSE " +
           num(dev.metrics.soc_rmse_pct) + "% (<= coupled+0.5), max logged "
           "radius " + num(worst_rho) + " (<=1), coupled training " +
           num(train_s, 3) + "s (<900)";
  return ok;
}

/* --- 6. temperature transfer few-shot trend ------------------------------------ */

bool check_transfer_trend(std::string& detail) {
  const fs::path dir = g_root / "temp_fleet";
  fs::create_directories(dir);
  RunConfig cfg;
  cfg.split.scenario = Scenario::kTempOod;
  FleetConfig fleet;
  fleet.base = cfg.synth;  // default shift axis: temperature
  for (const SynthBattery& b : generate_fleet(fleet))
    write_battery_files(b, dir.string());
  const std::vector<LoadedBattery> bats = load_batteries(dir.string(), cfg.n_c);

  const OodRun run = run_ood(bats, cfg, {0.0, 0.01, 0.10});
  if (run.points.size() != 3 || run.points[0].k_shot != 0.0 ||
      run.points[1].k_shot != 0.01 || run.points[2].k_shot != 0.10) {
    detail = "transfer driver returned unexpected support levels";
    return false;
  }
  const double r0 = run.points[0].metrics.soc_rmse_pct;
  const double r1 = run.points[1].metrics.soc_rmse_pct;
  const double r10 = run.points[2].metrics.soc_rmse_pct;

  const bool ok = r1 <= r0 + 0.1 && r10 <= r1 + 0.1;
  detail = "hot battery held out, SoC RMSE by support: zero-shot " + num(r0) +
           "%, 1% support " + num(r1) + "%, 10% support " + num(r10) +
           "% (each step may regress at most 0.1 absolute)";
  return ok;
}

/* --- 7. charge bookkeeping identities ------------------------------------------ */

bool check_bookkeeping(std::string& detail) {
  // A handwritten discharge cycle through the real CSV parser and resampler:
  // zero discharged charge at the first sample, exactly q_max at the last.
  const std::string csv =
      "battery_id,cycle_index,t_s,voltage_v,current_a,temperature_c,"
      "q_discharged_ah,q_max_ah\n"
      "BK-1,0,0,4.2,-1.0,25,0,3.5\n"
      "BK-1,0,300,4.0,-1.0,25,0.875,3.5\n"
      "BK-1,0,600,3.8,-1.0,25,1.75,3.5\n"
      "BK-1,0,900,3.4,-1.0,25,2.625,3.5\n"
      "BK-1,0,1200,3.0,-1.0,25,3.5,3.5\n";
  const std::vector<RawCycle> raws = parse_cycles_text(csv, "in-memory");
  if (raws.size() != 1) {
    detail = "parser returned " + std::to_string(raws.size()) + " cycles";
    return false;
  }
  const ResampledCycle rc = resample_cycle(raws[0], 5);

  bool ok = rc.soc_pct(0) == 100.0 && rc.soc_pct(4) == 0.0 &&
            soh_pct(rc.q_max_ah, 3.5) == 100.0;
  for (const double q : {0.8, 1.1, 2.2, 3.5, 4.9}) {
    ok = ok && soc_from_discharge(0.0, q) == 100.0 &&
         soc_from_discharge(q, q) == 0.0 && soh_pct(q, q) == 100.0;
  }
  detail = "via CSV parse + resample: SoC at zero discharge " +
           num(rc.soc_pct(0), 17) + "%, SoC at full discharge " +
           num(rc.soc_pct(4), 17) + "%, SoH at nominal capacity " +
           num(soh_pct(rc.q_max_ah, 3.5), 17) + "% (all exact)";
  return ok;
}

/* --- 8. bit-identical reruns ---------------------------------------------------- */

bool check_determinism(std::string& detail) {
  RunConfig cfg;  // the same stock defaults as the accuracy check
  const fs::path dir = g_root / "default_battery_rerun";
  fs::create_directories(dir);
  write_battery_files(generate_battery(cfg.synth), dir.string());
  const std::vector<LoadedBattery> bats = load_batteries(dir.string(), cfg.n_c);

  std::string first_ck = g_first_run.checkpoint_json;
  std::string first_mj = g_first_run.metrics_json;
  if (!g_first_run.available) {
    // The accuracy check did not complete; run the reference training here.
    const TrainedBundle b1 = run_training(bats, cfg);
    first_ck = checkpoint_to_json(b1);
    first_mj = metrics_to_json(evaluate_contiguous(b1, bats, false).metrics);
  }

  const TrainedBundle b2 = run_training(bats, cfg);
  const EvalOutput ev2 = evaluate_contiguous(b2, bats, false);

  // Metrics are compared with the wall-clock field dropped; everything else
  // must match to the last byte, as must the checkpoint itself.
  const auto strip_time = [](const std::string& mj) {
    nlohmann::json j = nlohmann::json::parse(mj);
    j.erase("time_s");
    return j.dump(2);
  };
  const bool ck_equal = checkpoint_to_json(b2) == first_ck;
  const bool mj_equal =
      strip_time(metrics_to_json(ev2.metrics)) == strip_time(first_mj);

  const bool ok = ck_equal && mj_equal;
  detail = std::string("regenerated data + retrained from scratch: checkpoint ") +
           (ck_equal ? "byte-identical" : "DIFFERS") + ", metrics " +
           (mj_equal ? "identical (wall-clock field excluded)" : "DIFFER");
  return ok;
}

/* --- harness --------------------------------------------------------------------- */

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no stated budget
  std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
  std::cout << "battery state estimator - acceptance gate\n"
            << "------------------------------------------" << std::endl;

  g_root = fs::temp_directory_path() / "kfno_acceptance";
  std::error_code ec;
  fs::remove_all(g_root, ec);
  fs::create_directories(g_root);

  const std::vector<Criterion> criteria = {
      {1, "latent operator stability projection", 10.0,
       check_stability_projection},
      {2, "joint analytic gradients vs finite differences", 60.0,
       check_joint_gradients},
      {3, "operator resolution transfer 45 -> 90", 0.0,
       check_resolution_transfer},
      {4, "Adam/AdamW equivalence and step decay", 0.0,
       check_optimizer_equivalence},
      {5, "default synthetic run accuracy", 900.0, check_end_to_end},
      {6, "temperature transfer few-shot trend", 1200.0, check_transfer_trend},
      {7, "charge bookkeeping identities", 0.0, check_bookkeeping},
      {8, "bit-identical reruns", 0.0, check_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("unexpected exception: ") + e.what();
      ok = false;
    }
    const double elapsed = seconds_since(t0);
    if (c.budget_s > 0.0 && elapsed > c.budget_s) {
      ok = false;
      detail += " [exceeded " + num(c.budget_s, 0) + "s budget]";
    }
    std::ostringstream line;
    line << (ok ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << " - "
         << detail << " (" << num(elapsed, 3) << "s)";
    std::cout << line.str() << std::endl;
    if (!ok) ++failures;
  }

  std::cout << "------------------------------------------\n"
            << (criteria.size() - static_cast<std::size_t>(failures)) << "/"
            << criteria.size() << " criteria passed" << std::endl;

  fs::remove_all(g_root, ec);
  return failures;
}
