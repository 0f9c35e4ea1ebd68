/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/dft.hpp"

#include <memory>
#include <mutex>
#include <unordered_map>

namespace kfno {
namespace {

// Precomputed cos/sin tables for a given (N, K). The truncated transforms are
// then plain matrix products, which keeps the O(N*K) kernels inside Eigen's
// GEMM. Tables are memoised because the training loop re-enters with the same
// shapes millions of times.
struct TrigTable {
  Matrix cos_nk;  // N x (K+1), cos(2*pi*k*t/N)
  Matrix sin_nk;  // N x (K+1), sin(2*pi*k*t/N)
};

const TrigTable& table_for(Index n, Index modes) {
  static std::mutex mu;
  static std::unordered_map<std::uint64_t, std::unique_ptr<TrigTable>> cache;
  const std::uint64_t key =
      (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(modes);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto t = std::make_unique<TrigTable>();
  t->cos_nk.resize(n, modes);
  t->sin_nk.resize(n, modes);
  const double two_pi = 6.283185307179586476925286766559;
  for (Index k = 0; k < modes; ++k) {
    for (Index i = 0; i < n; ++i) {
      const double ang = two_pi * static_cast<double>(k) * static_cast<double>(i) /
                         static_cast<double>(n);
      t->cos_nk(i, k) = std::cos(ang);
      t->sin_nk(i, k) = std::sin(ang);
    }
  }
  const TrigTable& ref = *t;
  cache.emplace(key, std::move(t));
  return ref;
}

// Reconstruction weight per mode: DC once, interior modes twice (their
// conjugate images), Nyquist once when present.
Vector recon_weights(Index modes, Index n_out) {
  Vector w(modes);
  for (Index k = 0; k < modes; ++k) {
    const bool dc = (k == 0);
    const bool nyquist = (n_out % 2 == 0) && (2 * k == n_out);
    w(k) = (dc || nyquist) ? 1.0 : 2.0;
  }
  return w;
}

}  // namespace

SpectrumCoeffs rfft_norm(const Matrix& signal, int max_mode) {
  const Index n = signal.rows();
  require(n >= 1, "rfft_norm: signal must have at least one sample");
  require(max_mode >= 0, "rfft_norm: mode count must be non-negative");
  require(2 * static_cast<Index>(max_mode) <= n,
          "rfft_norm: mode count K=" + std::to_string(max_mode) +
              " too large for signal length N=" + std::to_string(n) +
              "; need K <= floor(N/2)");
  const Index modes = static_cast<Index>(max_mode) + 1;
  const TrigTable& t = table_for(n, modes);
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix re = inv_n * (t.cos_nk.transpose() * signal);
  Matrix im = -inv_n * (t.sin_nk.transpose() * signal);
  SpectrumCoeffs out;
  out.coeffs.resize(modes, signal.cols());
  out.coeffs.real() = re;
  out.coeffs.imag() = im;
  return out;
}

Matrix irfft_pad(const SpectrumCoeffs& coeffs, Index n_out) {
  const Index modes = coeffs.mode_count();
  require(modes >= 1, "irfft_pad: need at least the DC mode");
  require(n_out >= 2 * (modes - 1) && n_out >= 1,
          "irfft_pad: output length N=" + std::to_string(n_out) +
              " too short for " + std::to_string(modes) +
              " modes; need N >= " + std::to_string(2 * (modes - 1)));
  const TrigTable& t = table_for(n_out, modes);
  const Vector w = recon_weights(modes, n_out);
  // y(t) = sum_k w_k * (Re c_k * cos - Im c_k * sin); the imaginary parts of
  // the DC/Nyquist bins drop out because sin(...) == 0 there.
  Matrix re_w = coeffs.coeffs.real().array().colwise() * w.array();
  Matrix im_w = coeffs.coeffs.imag().array().colwise() * w.array();
  return t.cos_nk * re_w - t.sin_nk * im_w;
}

ComplexMatrix irfft_pad_adjoint(const Matrix& d_out, Index mode_count) {
  const Index n = d_out.rows();
  const TrigTable& t = table_for(n, mode_count);
  const Vector w = recon_weights(mode_count, n);
  Matrix d_re = (t.cos_nk.transpose() * d_out).array().colwise() * w.array();
  Matrix d_im = -((t.sin_nk.transpose() * d_out).array().colwise() * w.array());
  ComplexMatrix d(mode_count, d_out.cols());
  d.real() = d_re;
  d.imag() = d_im;
  return d;
}

Matrix rfft_norm_adjoint(const ComplexMatrix& d_coeffs, Index n_signal) {
  const Index modes = d_coeffs.rows();
  const TrigTable& t = table_for(n_signal, modes);
  const double inv_n = 1.0 / static_cast<double>(n_signal);
  return inv_n * (t.cos_nk * d_coeffs.real() - t.sin_nk * d_coeffs.imag());
}

}  // namespace kfno
