/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * End-to-end checks of the command-line front end: each subcommand is run as
 * a real child process against synthetic data, and the files and streams it
 * produces are inspected. KFNO_CLI_PATH is injected by the build.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

long newlines(const std::string& s) {
  return std::count(s.begin(), s.end(), '\n');
}

// Runs the CLI with the given argument string; captures exit code and streams.
RunResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(KFNO_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// One scratch tree for the whole suite; individual cases use subdirectories.
// Later cases reuse the data and run artifacts produced by earlier ones, so
// the fixture builds everything once up front.
struct Fixture {
  fs::path root = "./kfno_cli_tmp";
  fs::path cfg_file = root / "tiny.json";
  fs::path data = root / "data";
  fs::path run = root / "run";

  Fixture() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream f(cfg_file);
    f << R"({
      "nc": 16,
      "seed": 11,
      "koopman": {"latent_dim": 6, "encoder_hidden": [8], "decoder_hidden": [8]},
      "fno": {"modes": 3, "layers": 2, "hidden_channels": 6, "lift_channels": 5},
      "train": {"max_epochs": 2, "adapt_epochs": 2},
      "synth": {"n_cycles": 12, "samples_per_cycle": 24}
    })";
  }
};

Fixture& fixture() {
  static Fixture fx;
  return fx;
}

std::string cfg_flag() {
  return "--config " + fixture().cfg_file.string();
}

}  // namespace

TEST_CASE("version and argument errors") {
  Fixture& fx = fixture();
  RunResult r = cli("--version", fx.root);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("1.0.0") != std::string::npos);

  // A subcommand is required.
  CHECK(cli("", fx.root).exit_code != 0);
  // Unknown subcommands and flags are rejected by the parser.
  CHECK(cli("frobnicate", fx.root).exit_code != 0);
  CHECK(cli("synth --out-dir x --no-such-flag", fx.root).exit_code != 0);
  // Required flags are enforced.
  CHECK(cli("synth", fx.root).exit_code != 0);
  CHECK(cli("train --data x", fx.root).exit_code != 0);
}

TEST_CASE("print-config resolves file plus flag overlays") {
  Fixture& fx = fixture();
  RunResult r = cli("synth " + cfg_flag() +
                        " --out-dir " + (fx.root / "unused").string() +
                        " --nc 20 --decoupled --print-config",
                    fx.root);
  REQUIRE(r.exit_code == 0);
  json cfg = json::parse(r.out);
  CHECK(cfg.at("nc") == 20);            // flag wins over file
  CHECK(cfg.at("seed") == 11);          // from file
  CHECK(cfg.at("coupled") == false);    // flag
  CHECK(cfg.at("synth").at("n_cycles") == 12);
  CHECK_FALSE(fs::exists(fx.root / "unused"));  // print-config exits early

  // Conflicting pathway flags abort before any work happens.
  RunResult bad = cli("synth " + cfg_flag() + " --out-dir " +
                          (fx.root / "unused").string() +
                          " --coupled --decoupled",
                      fx.root);
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("mutually exclusive") != std::string::npos);

  // An override violating config constraints is a clean error, not a crash.
  RunResult bad2 = cli("synth " + cfg_flag() + " --out-dir " +
                           (fx.root / "unused").string() + " --nc 1",
                       fx.root);
  CHECK(bad2.exit_code == 1);
  CHECK(bad2.err.find("error") != std::string::npos);
}

TEST_CASE("synth writes batteries and fleets") {
  Fixture& fx = fixture();
  RunResult r = cli("synth " + cfg_flag() + " --out-dir " + fx.data.string(),
                    fx.root);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("B-1") != std::string::npos);
  REQUIRE(fs::exists(fx.data / "B-1_cycles.csv"));
  CHECK(fs::exists(fx.data / "B-1_meta.json"));
  CHECK(fs::exists(fx.data / "B-1_truth.csv"));

  // A different generator seed changes the measurements.
  const fs::path alt = fx.root / "data_alt";
  REQUIRE(cli("synth " + cfg_flag() + " --out-dir " + alt.string() +
                  " --synth-seed 99",
              fx.root)
              .exit_code == 0);
  CHECK(slurp(alt / "B-1_cycles.csv") != slurp(fx.data / "B-1_cycles.csv"));

  // Fleet mode emits three batteries along the requested axis.
  const fs::path fleet = fx.root / "fleet";
  RunResult fr = cli("synth " + cfg_flag() + " --fleet temperature --out-dir " +
                         fleet.string(),
                     fx.root);
  REQUIRE(fr.exit_code == 0);
  for (const char* id : {"B-1", "B-2", "B-3"})
    CHECK(fs::exists(fleet / (std::string(id) + "_cycles.csv")));

  CHECK(cli("synth " + cfg_flag() + " --fleet sideways --out-dir " +
                (fx.root / "x").string(),
            fx.root)
            .exit_code == 1);
}

TEST_CASE("train writes the full artifact set and prints metrics") {
  Fixture& fx = fixture();
  RunResult r = cli("train " + cfg_flag() + " --data " + fx.data.string() +
                        " --out-dir " + fx.run.string(),
                    fx.root);
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"config.json", "checkpoint.json", "history.csv",
                           "spectrum.csv", "metrics.json", "predictions.csv"})
    CHECK(fs::exists(fx.run / name));

  // stdout carries the same metrics document that was written to disk.
  json metrics = json::parse(slurp(fx.run / "metrics.json"));
  CHECK(json::parse(r.out) == metrics);
  CHECK(metrics.at("scenario") == "contiguous");
  CHECK(metrics.at("soc_rmse_pct").is_number());

  // config.json is the resolved run configuration.
  json cfg = json::parse(slurp(fx.run / "config.json"));
  CHECK(cfg.at("nc") == 16);
  CHECK(cfg.at("seed") == 11);

  // History has one row per epoch; the tiny budget is 2.
  CHECK(newlines(slurp(fx.run / "history.csv")) == 3);
  CHECK(slurp(fx.run / "spectrum.csv").rfind("# rho=", 0) == 0);

  // ceil(0.25 * 12) = 3 held-out cycles at 16 grid points each.
  CHECK(newlines(slurp(fx.run / "predictions.csv")) == 1 + 3 * 16);

  // Missing data path fails cleanly.
  CHECK(cli("train " + cfg_flag() + " --data " + (fx.root / "nope").string() +
                " --out-dir " + (fx.root / "r2").string(),
            fx.root)
            .exit_code == 1);
}

TEST_CASE("eval reproduces training-time metrics from the checkpoint") {
  Fixture& fx = fixture();
  const fs::path out = fx.root / "eval";
  RunResult r = cli("eval --checkpoint " + (fx.run / "checkpoint.json").string() +
                        " --data " + fx.data.string() + " --out-dir " +
                        out.string(),
                    fx.root);
  REQUIRE(r.exit_code == 0);
  json fresh = json::parse(slurp(out / "metrics.json"));
  json trained = json::parse(slurp(fx.run / "metrics.json"));
  fresh.erase("time_s");
  trained.erase("time_s");
  CHECK(fresh == trained);
  CHECK(slurp(out / "predictions.csv") == slurp(fx.run / "predictions.csv"));

  // Rollout scoring runs and reports the same schema.
  RunResult rr = cli("eval --checkpoint " +
                         (fx.run / "checkpoint.json").string() + " --data " +
                         fx.data.string() + " --rollout",
                     fx.root);
  REQUIRE(rr.exit_code == 0);
  CHECK(json::parse(rr.out).at("soc_rmse_pct").is_number());

  // A nonexistent checkpoint is rejected by flag validation.
  CHECK(cli("eval --checkpoint " + (fx.root / "ghost.json").string() +
                " --data " + fx.data.string(),
            fx.root)
            .exit_code != 0);
}

TEST_CASE("predict and spectrum stream or save") {
  Fixture& fx = fixture();
  const std::string ckpt = (fx.run / "checkpoint.json").string();

  RunResult r = cli("predict --checkpoint " + ckpt + " --data " +
                        fx.data.string() + " --out -",
                    fx.root);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.rfind("battery_id,", 0) == 0);
  // 12 cycles: the first seeds the walk, 11 are predicted at 16 points each.
  CHECK(newlines(r.out) == 1 + 11 * 16);

  const fs::path pred_file = fx.root / "walk.csv";
  RunResult rf = cli("predict --checkpoint " + ckpt + " --data " +
                         fx.data.string() + " --out " + pred_file.string(),
                     fx.root);
  REQUIRE(rf.exit_code == 0);
  CHECK(slurp(pred_file) == r.out);

  RunResult sp = cli("spectrum --checkpoint " + ckpt, fx.root);
  REQUIRE(sp.exit_code == 0);
  CHECK(sp.out.rfind("# rho=", 0) == 0);
  CHECK(sp.out.find("index,re,im,modulus") != std::string::npos);
  const double rho = std::stod(sp.out.substr(6));
  CHECK(rho <= 1.0 + 1e-9);

  const fs::path spec_file = fx.root / "spec.csv";
  REQUIRE(cli("spectrum --checkpoint " + ckpt + " --out " + spec_file.string(),
              fx.root)
              .exit_code == 0);
  CHECK(slurp(spec_file) == sp.out);
}

TEST_CASE("transfer protocol drives the per-support artifact set") {
  Fixture& fx = fixture();
  const fs::path out = fx.root / "ood";
  RunResult r = cli("train " + cfg_flag() + " --data " +
                        (fx.root / "fleet").string() + " --out-dir " +
                        out.string() +
                        " --scenario temp-ood --k-shots 0 20",
                    fx.root);
  REQUIRE(r.exit_code == 0);

  json all = json::parse(slurp(out / "metrics_all.json"));
  REQUIRE(all.is_array());
  REQUIRE(all.size() == 2);
  CHECK(all[0].at("k_shot") == 0.0);
  CHECK(all[1].at("k_shot") == 0.2);
  CHECK(all[0].at("scenario") == "temp-ood");
  CHECK(json::parse(r.out) == all);

  CHECK(fs::exists(out / "base_checkpoint.json"));
  CHECK(fs::exists(out / "base_history.csv"));
  for (const std::string tag : {"0pct", "20pct"}) {
    CHECK(fs::exists(out / ("metrics_k" + tag + ".json")));
    CHECK(fs::exists(out / ("predictions_k" + tag + ".csv")));
    CHECK(fs::exists(out / ("spectrum_k" + tag + ".csv")));
  }

  // The base checkpoint is a regular checkpoint: other subcommands accept it.
  RunResult sp = cli("spectrum --checkpoint " +
                         (out / "base_checkpoint.json").string(),
                     fx.root);
  CHECK(sp.exit_code == 0);

  // Cleanup for the whole suite (last case).
  fs::remove_all(fx.root);
}
