/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_MLP_HPP
#define KFNO_CORE_MLP_HPP

#include "core/common.hpp"

namespace kfno {

enum class Act { kNone, kSelu, kGelu };

// Fully connected stack. The hidden activation is applied after every layer
// except the last, which stays affine. Rows of the input matrix are
// independent samples (time steps or batch entries), so the same code serves
// the per-scalar capacity networks and the per-time-step lift/projection.
struct Mlp {
  std::vector<Matrix> weights;  // layer l: out_l x in_l
  std::vector<Vector> biases;   // layer l: out_l
  Act hidden_act = Act::kNone;

  Index layer_count() const { return static_cast<Index>(weights.size()); }
  Index in_dim() const { return weights.front().cols(); }
  Index out_dim() const { return weights.back().rows(); }

  // widths = [in, h1, ..., out]; weights and biases drawn uniform in
  // +-sqrt(1/fan_in), weights first then bias, layer by layer.
  static Mlp create(const std::vector<Index>& widths, Act hidden_act, Rng& rng);
};

struct MlpCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // preactivation of each layer
};

// x: rows = samples, cols = in_dim. Returns rows x out_dim.
Matrix mlp_forward(const Mlp& m, const Matrix& x, MlpCache* cache = nullptr);

// Reverse pass. d_out matches the forward output shape; parameter gradients
// are accumulated into grads (same shapes as the model, caller zero-fills).
// Returns the gradient with respect to the input.
Matrix mlp_backward(const Mlp& m, const MlpCache& cache, const Matrix& d_out,
                    Mlp& grads);

// Zero-filled structural clone used as a gradient accumulator.
Mlp mlp_zeros_like(const Mlp& m);

}  // namespace kfno

#endif  // KFNO_CORE_MLP_HPP
