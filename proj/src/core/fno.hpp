/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_FNO_HPP
#define KFNO_CORE_FNO_HPP

#include "core/dft.hpp"
#include "core/mlp.hpp"
#include "core/params.hpp"

namespace kfno {

struct FnoConfig {
  int modes = 20;            // retained Fourier modes K (coefficients 0..K)
  Index layer_count = 4;     // spectral mixing layers
  Index hidden_channels = 48;
  Index lift_channels = 32;  // intermediate width of lift and projection
  Index in_channels = 4;     // V, I, T, capacity (broadcast)
  Index out_channels = 1;    // SoC
};

// One spectral mixing layer: a per-mode complex kernel acting on the
// truncated spectrum, a pointwise linear bypass, and a bias, all inside a
// GELU.
struct FourierLayer {
  std::vector<ComplexMatrix> r;  // per mode 0..K: c_out x c_in
  Matrix w;                      // c_out x c_in pointwise bypass
  Vector b;                      // c_out
};

// Sequence-to-sequence operator on per-cycle sensor traces. Because the
// spectral kernels act on resolution-independent (1/N-normalised) Fourier
// coefficients, a trained operator evaluates consistently on grids of
// different lengths.
struct FnoModel {
  Mlp lift;     // in_channels -> lift_channels -> hidden (GELU between)
  std::vector<FourierLayer> layers;
  Mlp project;  // hidden -> lift_channels -> out_channels (GELU between)
  int modes = 20;

  static FnoModel create(const FnoConfig& cfg, Rng& rng);

  Index hidden_channels() const { return lift.out_dim(); }
  Index in_channels() const { return lift.in_dim(); }

  // Fixed-order parameter views: lift blocks, then per layer (R, W, b),
  // then projection blocks. Complex kernels appear as interleaved re/im.
  std::vector<ParamBlock> param_blocks();
};

FnoModel fno_zeros_like(const FnoModel& m);

// Spectral path alone: irfft_pad(R . rfft_norm(v)), no bypass, no bias, no
// activation. Exposed separately because its translation equivariance is a
// meaningful property on its own.
Matrix spectral_conv(const Matrix& v, const FourierLayer& layer, int modes);

// Full layer: GELU(spectral_conv(v) + v*W^T + b).
Matrix fourier_layer_forward(const Matrix& v, const FourierLayer& layer, int modes);

struct FnoLayerCache {
  Matrix input;          // N x c_in
  ComplexMatrix coeffs;  // (K+1) x c_in
  ComplexMatrix mixed;   // (K+1) x c_out
  Matrix pre;            // N x c_out, preactivation
};

struct FnoCache {
  MlpCache lift;
  std::vector<FnoLayerCache> layers;
  MlpCache project;
};

// x: N x in_channels. Requires N >= 2*modes + 1 (throws Error naming the
// minimum admissible length). Returns N x out_channels.
Matrix fno_forward(const FnoModel& m, const Matrix& x, FnoCache* cache = nullptr);

// Reverse pass; accumulates parameter gradients into grads and returns
// dL/dx (N x in_channels).
Matrix fno_backward(const FnoModel& m, const FnoCache& cache, const Matrix& d_out,
                    FnoModel& grads);

}  // namespace kfno

#endif  // KFNO_CORE_FNO_HPP
