/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/grad_check.hpp"

namespace kfno {

GradCheckResult grad_check(const LossAndGradFn& f, const Vector& theta,
                           const std::vector<Index>& probes, double h) {
  require(h > 0.0, "grad_check: step size must be positive");
  Vector grad;
  const double base = f(theta, &grad);
  require(std::isfinite(base), "grad_check: loss non-finite at the base point");
  require(grad.size() == theta.size(),
          "grad_check: gradient size mismatch (" + std::to_string(grad.size()) +
              " vs " + std::to_string(theta.size()) + ")");

  GradCheckResult result;
  Vector probe_point = theta;
  for (Index i : probes) {
    require(i >= 0 && i < theta.size(),
            "grad_check: probe index " + std::to_string(i) + " out of range");
    const double saved = probe_point(i);
    probe_point(i) = saved + h;
    const double f_plus = f(probe_point, nullptr);
    probe_point(i) = saved - h;
    const double f_minus = f(probe_point, nullptr);
    probe_point(i) = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      throw Error("grad_check: loss non-finite while probing coordinate " +
                  std::to_string(i));
    }
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double g = grad(i);
    const double denom = std::max({std::abs(g), std::abs(fd), 1e-8});
    const double rel = std::abs(g - fd) / denom;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_index = i;
      result.worst_analytic = g;
      result.worst_numeric = fd;
    }
  }
  return result;
}

std::vector<Index> random_probes(Index dim, int n, Rng& rng) {
  require(dim > 0, "random_probes: empty parameter vector");
  std::vector<Index> probes;
  probes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    probes.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(dim))));
  }
  return probes;
}

}  // namespace kfno
