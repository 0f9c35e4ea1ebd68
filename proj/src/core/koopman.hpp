/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_KOOPMAN_HPP
#define KFNO_CORE_KOOPMAN_HPP

#include "core/eig.hpp"
#include "core/mlp.hpp"
#include "core/params.hpp"

namespace kfno {

struct KoopmanConfig {
  Index latent_dim = 32;
  std::vector<Index> encoder_hidden = {128, 64, 32, 16};
  std::vector<Index> decoder_hidden = {32, 16};
  Index input_dim = 1;    // scalar per-cycle capacity
  Index control_dim = 3;  // cycle summary (mean V, I, T)
};

// Capacity-dynamics model: a nonlinear encoder lifts the scaled capacity into
// a latent space where one cycle of degradation is a linear map plus a linear
// control term, and a decoder maps back. Keeping the latent update linear is
// what makes the dynamics analyzable: its eigenvalues are the degradation
// modes, and clamping their moduli enforces stable long-horizon rollouts.
struct KoopmanModel {
  Mlp encoder;   // input_dim -> hidden... -> latent_dim (SELU between)
  Matrix k_op;   // latent_dim x latent_dim
  Matrix b_op;   // latent_dim x control_dim
  Mlp decoder;   // latent_dim -> hidden... -> input_dim (SELU between)
  double rho_max = 1.0;

  static KoopmanModel create(const KoopmanConfig& cfg, Rng& rng);

  Index latent_dim() const { return k_op.rows(); }

  Vector encode(double q) const;
  Vector latent_step(const Vector& z, const Vector& u_bar) const;
  double decode(const Vector& z) const;
  // decode(K*encode(q) + B*u_bar): one-cycle capacity forecast.
  double forecast_next(double q, const Vector& u_bar) const;
  // Latent-space rollout: encode once, iterate the linear update over the
  // control sequence, decode every step. Returns one forecast per control.
  std::vector<double> rollout(double q0, const std::vector<Vector>& u_bars) const;

  // Fixed-order parameter views: encoder blocks, K, B, decoder blocks.
  std::vector<ParamBlock> param_blocks();
};

// Gradient accumulator with the same shapes as the model.
KoopmanModel koopman_zeros_like(const KoopmanModel& m);

enum class ClipOutcome {
  kUnchanged,       // spectral radius already within bound
  kClipped,         // offending eigenvalues rescaled, matrix rebuilt
  kScaledFallback,  // eigenbasis too ill-conditioned; whole matrix rescaled
  kEigFailed        // decomposition failed; matrix passed through untouched
};

struct ClipResult {
  Matrix k;
  ClipOutcome outcome = ClipOutcome::kUnchanged;
  double rho_before = 0.0;
  double rho_after = 0.0;
  double imag_residue = 0.0;
};

// Projects the latent operator onto the stable set {rho(K) <= rho_max}.
// Eigenvalues over the bound are shrunk radially (phase preserved), the
// matrix is rebuilt from the modified spectrum in the original eigenbasis,
// and the vanishing imaginary residue is discarded. If the rebuilt matrix
// fails verification (defective/ill-conditioned eigenbasis), falls back to
// scaling the whole matrix by rho_max/rho. rho_max must lie in (0, 1].
ClipResult spectral_clip(const Matrix& k, double rho_max);

struct SpectrumResult {
  ComplexVector values;  // sorted by descending modulus
  double rho = 0.0;
};

// Eigenvalues of the latent operator, sorted by descending modulus
// (deterministic tie-break on real, then imaginary part).
SpectrumResult spectrum(const Matrix& k);

}  // namespace kfno

#endif  // KFNO_CORE_KOOPMAN_HPP
