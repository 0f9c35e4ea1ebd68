/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_GRAD_CHECK_HPP
#define KFNO_CORE_GRAD_CHECK_HPP

#include "core/common.hpp"

#include <functional>

namespace kfno {

// A differentiable scalar objective: returns the loss at theta and, when the
// gradient pointer is non-null, fills it (resized to theta's length).
using LossAndGradFn = std::function<double(const Vector& theta, Vector* grad)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central finite-difference verification of the analytic gradient at theta,
// restricted to the probed coordinates:
//   fd_i  = (f(theta + h e_i) - f(theta - h e_i)) / (2h)
//   rel_i = |g_i - fd_i| / max(|g_i|, |fd_i|, 1e-8)
// Throws Error if the loss turns non-finite during probing (the message names
// the offending coordinate).
GradCheckResult grad_check(const LossAndGradFn& f, const Vector& theta,
                           const std::vector<Index>& probes, double h = 1e-5);

// Convenience: n uniformly random probe coordinates.
std::vector<Index> random_probes(Index dim, int n, Rng& rng);

}  // namespace kfno

#endif  // KFNO_CORE_GRAD_CHECK_HPP
