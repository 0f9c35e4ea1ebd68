/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_ACTIVATIONS_HPP
#define KFNO_CORE_ACTIVATIONS_HPP

#include <cmath>

namespace kfno {

// Self-normalising exponential-linear unit. The two constants are the
// standard self-normalising pair, written out to full double precision.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

inline double selu(double x) {
  return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

// Derivative; at the kink (x == 0) this takes the exponential branch's value
// lambda*alpha, the convention reverse-mode autodiff frameworks use.
inline double selu_grad(double x) {
  return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

// Gaussian error linear unit, exact erf form (no tanh approximation).
inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

}  // namespace kfno

#endif  // KFNO_CORE_ACTIVATIONS_HPP
