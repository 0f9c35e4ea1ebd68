/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Loss components against hand-computed values: huber core/tail algebra,
 * subgradient conventions at kinks, batch-mean semantics, and the weighted
 * total.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/losses.hpp"

using namespace kfno;

namespace {

KoopmanConfig micro_config() {
  KoopmanConfig cfg;
  cfg.latent_dim = 4;
  cfg.encoder_hidden = {6};
  cfg.decoder_hidden = {6};
  return cfg;
}

}  // namespace

TEST_CASE("huber matches its closed form on both branches") {
  // Quadratic core: 0.5 e^2.
  CHECK(huber(0.0, 1.0) == 0.0);
  CHECK(huber(0.4, 1.0) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(huber(-0.4, 1.0) == doctest::Approx(0.08).epsilon(1e-15));
  // Exactly at the transition the branches agree: 0.5 d^2.
  CHECK(huber(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(huber(-1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Linear tail: d(|e| - d/2).
  CHECK(huber(3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(huber(-3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  // Non-unit delta.
  CHECK(huber(0.1, 0.25) == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(huber(2.0, 0.25) == doctest::Approx(0.25 * (2.0 - 0.125)).epsilon(1e-15));
}

TEST_CASE("huber gradient is continuous and clamped at the tails") {
  CHECK(huber_grad(0.0, 1.0) == 0.0);
  CHECK(huber_grad(0.3, 1.0) == 0.3);
  CHECK(huber_grad(-0.3, 1.0) == -0.3);
  CHECK(huber_grad(1.0, 1.0) == 1.0);
  CHECK(huber_grad(5.0, 1.0) == 1.0);
  CHECK(huber_grad(-5.0, 1.0) == -1.0);
  CHECK(huber_grad(2.0, 0.5) == 0.5);

  // Finite-difference agreement away from the kinks.
  const double h = 1e-7;
  for (double e : {-2.7, -0.6, 0.2, 0.99, 1.5}) {
    const double fd = (huber(e + h, 1.0) - huber(e - h, 1.0)) / (2.0 * h);
    CHECK(huber_grad(e, 1.0) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("sign0 sends the origin to zero") {
  CHECK(sign0(3.5) == 1.0);
  CHECK(sign0(-0.001) == -1.0);
  CHECK(sign0(0.0) == 0.0);
  CHECK(sign0(-0.0) == 0.0);
}

TEST_CASE("reconstruction loss is the batch mean absolute roundtrip error") {
  Rng rng(21);
  KoopmanModel m = KoopmanModel::create(micro_config(), rng);
  std::vector<double> q = {0.9, 0.7, 0.45};
  double expected = 0.0;
  for (double qi : q) expected += std::abs(qi - m.decode(m.encode(qi)));
  expected /= 3.0;
  CHECK(rec_loss(q, m) == doctest::Approx(expected).epsilon(1e-15));

  // Single element: no averaging.
  std::vector<double> one = {0.62};
  CHECK(rec_loss(one, m) ==
        doctest::Approx(std::abs(0.62 - m.decode(m.encode(0.62))))
            .epsilon(1e-15));
}

TEST_CASE("latent-consistency loss averages over batch and latent coordinates") {
  Rng rng(22);
  KoopmanConfig cfg = micro_config();
  KoopmanModel m = KoopmanModel::create(cfg, rng);
  std::vector<double> q = {0.9, 0.6};
  std::vector<double> q_next = {0.88, 0.58};
  std::vector<Vector> u = {Vector::Ones(3) * 0.1, Vector::Ones(3) * -0.2};

  double expected = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vector z_next_pred = m.latent_step(m.encode(q[i]), u[i]);
    Vector z_next_enc = m.encode(q_next[i]);
    expected += (z_next_enc - z_next_pred).cwiseAbs().sum() / cfg.latent_dim;
  }
  expected /= static_cast<double>(q.size());
  CHECK(lin_loss(q, q_next, u, m) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forecast loss is the mean absolute one-step error") {
  Rng rng(23);
  KoopmanModel m = KoopmanModel::create(micro_config(), rng);
  std::vector<double> q = {0.95, 0.8, 0.5};
  std::vector<double> q_next = {0.94, 0.79, 0.48};
  std::vector<Vector> u = {Vector::Ones(3) * 0.3, Vector::Zero(3),
                           Vector::Ones(3) * -0.1};

  double expected = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    expected += std::abs(q_next[i] - m.forecast_next(q[i], u[i]));
  expected /= 3.0;
  CHECK(pred_loss(q, q_next, u, m) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("trajectory loss pools every time step of every trajectory") {
  Vector a_true(3), a_pred(3), b_true(2), b_pred(2);
  a_true << 1.0, 0.5, 0.0;
  a_pred << 1.2, 0.5, -0.3;   // errors -0.2, 0, 0.3 (all in the core)
  b_true << 0.9, 0.1;
  b_pred << -1.6, 0.1;        // errors 2.5 (tail), 0
  const double delta = 1.0;
  const double expected =
      (huber(-0.2, delta) + 0.0 + huber(0.3, delta) + huber(2.5, delta) + 0.0) /
      5.0;
  CHECK(soc_loss({a_true, b_true}, {a_pred, b_pred}, delta) ==
        doctest::Approx(expected).epsilon(1e-15));
  // (0.02 + 0.045 + 2.0) / 5 with delta = 1.
  CHECK(soc_loss({a_true, b_true}, {a_pred, b_pred}, delta) ==
        doctest::Approx(2.065 / 5.0).epsilon(1e-13));

  // Pooling across trajectories of unequal length weights by step count, not
  // by trajectory: one long flat trajectory dilutes a single bad step.
  Vector flat_true = Vector::Zero(8), flat_pred = Vector::Zero(8);
  Vector bad_true(1), bad_pred(1);
  bad_true << 0.0;
  bad_pred << 1.0;
  CHECK(soc_loss({flat_true, bad_true}, {flat_pred, bad_pred}, delta) ==
        doctest::Approx(0.5 / 9.0).epsilon(1e-15));
}

TEST_CASE("mismatched or empty batches are rejected") {
  Rng rng(24);
  KoopmanModel m = KoopmanModel::create(micro_config(), rng);
  CHECK_THROWS_AS(rec_loss({}, m), Error);
  CHECK_THROWS_AS(lin_loss({0.5}, {0.4, 0.3}, {Vector::Zero(3)}, m), Error);
  CHECK_THROWS_AS(pred_loss({0.5, 0.6}, {0.4}, {Vector::Zero(3), Vector::Zero(3)}, m),
                  Error);
  CHECK_THROWS_AS(soc_loss({Vector::Zero(3)}, {Vector::Zero(2)}, 1.0), Error);
  CHECK_THROWS_AS(soc_loss({}, {}, 1.0), Error);
}

TEST_CASE("the total is the weighted sum with default weights 1, 1e-4, 1, 1") {
  LossBreakdown parts;
  parts.rec = 0.25;
  parts.lin = 40.0;
  parts.pred = 0.5;
  parts.soc = 0.125;
  LossWeights w;
  CHECK(total_loss(parts, w) ==
        doctest::Approx(0.25 + 1e-4 * 40.0 + 0.5 + 0.125).epsilon(1e-15));

  w.rec = 2.0;
  w.lin = 0.0;
  w.pred = 0.25;
  w.soc = 10.0;
  CHECK(total_loss(parts, w) ==
        doctest::Approx(2.0 * 0.25 + 0.25 * 0.5 + 10.0 * 0.125).epsilon(1e-15));
}
