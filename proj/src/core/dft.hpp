/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_DFT_HPP
#define KFNO_CORE_DFT_HPP

#include "core/common.hpp"

namespace kfno {

// Truncated spectrum of a real multi-channel signal: rows are modes 0..K,
// columns are channels. Produced by rfft_norm, consumed by irfft_pad.
struct SpectrumCoeffs {
  ComplexMatrix coeffs;  // (K+1) x channels
  Index mode_count() const { return coeffs.rows(); }
  Index channels() const { return coeffs.cols(); }
};

// Forward real DFT with 1/N normalisation, truncated to modes 0..K:
//   c_k = (1/N) * sum_t x_t * exp(-2*pi*i*k*t/N)
// The 1/N-on-forward convention makes the retained coefficients independent
// of the sampling resolution for band-limited signals, which is what the
// spectral layers rely on for resolution transfer.
//
// signal: N x C (rows = samples, columns = channels). Requires K >= 0 and
// K <= floor(N/2); throws Error otherwise.
SpectrumCoeffs rfft_norm(const Matrix& signal, int max_mode);

// Inverse map back to a length-N real signal: the truncated spectrum is
// zero-padded to the full bin count, conjugate symmetry is imposed so the
// reconstruction is real, and the inverse sum carries the matching factor N.
// DC (and the Nyquist bin when mode_count-1 == N/2) contribute their real
// parts only, exactly as conjugate symmetrisation dictates.
//
// Requires N >= 2*(mode_count-1); throws Error otherwise.
Matrix irfft_pad(const SpectrumCoeffs& coeffs, Index n_out);

// Adjoint maps used by reverse-mode differentiation. Both treat the real and
// imaginary parts of each coefficient as independent real degrees of freedom.
//
// Given dL/d(irfft_pad output) of shape N x C, returns dL/d(coeffs).
ComplexMatrix irfft_pad_adjoint(const Matrix& d_out, Index mode_count);
// Given dL/d(rfft_norm output), returns dL/d(signal) of shape N x C.
Matrix rfft_norm_adjoint(const ComplexMatrix& d_coeffs, Index n_signal);

}  // namespace kfno

#endif  // KFNO_CORE_DFT_HPP
