/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/fno.hpp"

#include "core/activations.hpp"

namespace kfno {

FnoModel FnoModel::create(const FnoConfig& cfg, Rng& rng) {
  require(cfg.modes >= 0, "FnoModel: modes must be non-negative");
  require(cfg.layer_count > 0, "FnoModel: need at least one spectral layer");
  require(cfg.hidden_channels > 0 && cfg.lift_channels > 0,
          "FnoModel: channel widths must be positive");
  FnoModel m;
  m.modes = cfg.modes;
  m.lift = Mlp::create({cfg.in_channels, cfg.lift_channels, cfg.hidden_channels},
                       Act::kGelu, rng);
  const Index c = cfg.hidden_channels;
  const double r_bound =
      std::sqrt(1.0 / (static_cast<double>(c) * static_cast<double>(cfg.modes + 1)));
  const double w_bound = std::sqrt(1.0 / static_cast<double>(c));
  for (Index l = 0; l < cfg.layer_count; ++l) {
    FourierLayer layer;
    layer.r.reserve(static_cast<std::size_t>(cfg.modes) + 1);
    for (int k = 0; k <= cfg.modes; ++k) {
      ComplexMatrix rk(c, c);
      for (Index i = 0; i < c; ++i) {
        for (Index j = 0; j < c; ++j) {
          const double re = rng.uniform(-r_bound, r_bound);
          const double im = rng.uniform(-r_bound, r_bound);
          rk(i, j) = std::complex<double>(re, im);
        }
      }
      layer.r.push_back(std::move(rk));
    }
    layer.w.resize(c, c);
    for (Index i = 0; i < c; ++i)
      for (Index j = 0; j < c; ++j) layer.w(i, j) = rng.uniform(-w_bound, w_bound);
    layer.b.resize(c);
    for (Index i = 0; i < c; ++i) layer.b(i) = rng.uniform(-w_bound, w_bound);
    m.layers.push_back(std::move(layer));
  }
  m.project = Mlp::create({cfg.hidden_channels, cfg.lift_channels, cfg.out_channels},
                          Act::kGelu, rng);
  return m;
}

std::vector<ParamBlock> FnoModel::param_blocks() {
  std::vector<ParamBlock> blocks;
  collect_mlp_blocks(lift, "lift", blocks);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "fourier" + std::to_string(l);
    for (std::size_t k = 0; k < layers[l].r.size(); ++k) {
      // Complex matrices are contiguous (re, im) pairs in memory.
      blocks.push_back({prefix + ".R" + std::to_string(k),
                        reinterpret_cast<double*>(layers[l].r[k].data()),
                        static_cast<std::size_t>(layers[l].r[k].size()) * 2});
    }
    blocks.push_back({prefix + ".W", layers[l].w.data(),
                      static_cast<std::size_t>(layers[l].w.size())});
    blocks.push_back({prefix + ".b", layers[l].b.data(),
                      static_cast<std::size_t>(layers[l].b.size())});
  }
  collect_mlp_blocks(project, "project", blocks);
  return blocks;
}

FnoModel fno_zeros_like(const FnoModel& m) {
  FnoModel z;
  z.modes = m.modes;
  z.lift = mlp_zeros_like(m.lift);
  for (const auto& layer : m.layers) {
    FourierLayer zl;
    for (const auto& rk : layer.r)
      zl.r.push_back(ComplexMatrix::Zero(rk.rows(), rk.cols()));
    zl.w = Matrix::Zero(layer.w.rows(), layer.w.cols());
    zl.b = Vector::Zero(layer.b.size());
    z.layers.push_back(std::move(zl));
  }
  z.project = mlp_zeros_like(m.project);
  return z;
}

namespace {

ComplexMatrix mix_modes(const ComplexMatrix& coeffs, const FourierLayer& layer) {
  const Index modes = coeffs.rows();
  const Index c_out = layer.r.front().rows();
  ComplexMatrix mixed(modes, c_out);
  for (Index k = 0; k < modes; ++k) {
    mixed.row(k) = (layer.r[static_cast<std::size_t>(k)] *
                    coeffs.row(k).transpose())
                       .transpose();
  }
  return mixed;
}

}  // namespace

Matrix spectral_conv(const Matrix& v, const FourierLayer& layer, int modes) {
  SpectrumCoeffs sc = rfft_norm(v, modes);
  SpectrumCoeffs mixed{mix_modes(sc.coeffs, layer)};
  return irfft_pad(mixed, v.rows());
}

Matrix fourier_layer_forward(const Matrix& v, const FourierLayer& layer, int modes) {
  Matrix pre = spectral_conv(v, layer, modes);
  pre.noalias() += v * layer.w.transpose();
  pre.rowwise() += layer.b.transpose();
  return pre.unaryExpr([](double x) { return gelu(x); });
}

Matrix fno_forward(const FnoModel& m, const Matrix& x, FnoCache* cache) {
  const Index n = x.rows();
  require(n >= 2 * static_cast<Index>(m.modes) + 1,
          "fno_forward: cycle length " + std::to_string(n) +
              " too short for " + std::to_string(m.modes) +
              " modes; need at least " + std::to_string(2 * m.modes + 1) +
              " samples");
  require(x.cols() == m.in_channels(),
          "fno_forward: expected " + std::to_string(m.in_channels()) +
              " input channels, got " + std::to_string(x.cols()));
  if (cache != nullptr) cache->layers.assign(m.layers.size(), FnoLayerCache{});

  Matrix v = mlp_forward(m.lift, x, cache != nullptr ? &cache->lift : nullptr);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const FourierLayer& layer = m.layers[l];
    SpectrumCoeffs sc = rfft_norm(v, m.modes);
    ComplexMatrix mixed = mix_modes(sc.coeffs, layer);
    Matrix pre = irfft_pad(SpectrumCoeffs{mixed}, n);
    pre.noalias() += v * layer.w.transpose();
    pre.rowwise() += layer.b.transpose();
    if (cache != nullptr) {
      FnoLayerCache& lc = cache->layers[l];
      lc.input = v;
      lc.coeffs = std::move(sc.coeffs);
      lc.mixed = std::move(mixed);
      lc.pre = pre;
    }
    v = pre.unaryExpr([](double x_) { return gelu(x_); });
  }
  return mlp_forward(m.project, v, cache != nullptr ? &cache->project : nullptr);
}

Matrix fno_backward(const FnoModel& m, const FnoCache& cache, const Matrix& d_out,
                    FnoModel& grads) {
  Matrix d_v = mlp_backward(m.project, cache.project, d_out, grads.project);
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const FourierLayer& layer = m.layers[li];
    FourierLayer& g_layer = grads.layers[li];
    const FnoLayerCache& lc = cache.layers[li];
    // Through the activation.
    Matrix d_pre = d_v.cwiseProduct(
        lc.pre.unaryExpr([](double x_) { return gelu_grad(x_); }));
    // Pointwise bypass and bias.
    g_layer.w.noalias() += d_pre.transpose() * lc.input;
    g_layer.b.noalias() += d_pre.colwise().sum().transpose();
    Matrix d_input = d_pre * layer.w;
    // Spectral path: adjoint of the inverse transform, then of the per-mode
    // mixing (dR_k = g_k * c_k^H, dc_k = R_k^H * g_k), then of the forward
    // transform.
    ComplexMatrix d_mixed = irfft_pad_adjoint(d_pre, lc.mixed.rows());
    ComplexMatrix d_coeffs(lc.coeffs.rows(), lc.coeffs.cols());
    for (Index k = 0; k < d_mixed.rows(); ++k) {
      const auto uk = static_cast<std::size_t>(k);
      g_layer.r[uk].noalias() +=
          d_mixed.row(k).transpose() * lc.coeffs.row(k).conjugate();
      d_coeffs.row(k) =
          (layer.r[uk].adjoint() * d_mixed.row(k).transpose()).transpose();
    }
    d_input.noalias() += rfft_norm_adjoint(d_coeffs, lc.input.rows());
    d_v = std::move(d_input);
  }
  return mlp_backward(m.lift, cache.lift, d_v, grads.lift);
}

}  // namespace kfno
