/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/mlp.hpp"

#include "core/activations.hpp"

namespace kfno {
namespace {

inline double act_apply(Act a, double x) {
  switch (a) {
    case Act::kSelu: return selu(x);
    case Act::kGelu: return gelu(x);
    default: return x;
  }
}

inline double act_grad(Act a, double x) {
  switch (a) {
    case Act::kSelu: return selu_grad(x);
    case Act::kGelu: return gelu_grad(x);
    default: return 1.0;
  }
}

}  // namespace

Mlp Mlp::create(const std::vector<Index>& widths, Act hidden_act, Rng& rng) {
  require(widths.size() >= 2, "Mlp::create: need at least input and output widths");
  Mlp m;
  m.hidden_act = hidden_act;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index fan_in = widths[l];
    const Index fan_out = widths[l + 1];
    require(fan_in > 0 && fan_out > 0, "Mlp::create: widths must be positive");
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
      for (Index j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    Vector b(fan_out);
    for (Index i = 0; i < fan_out; ++i) b(i) = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

Matrix mlp_forward(const Mlp& m, const Matrix& x, MlpCache* cache) {
  require(x.cols() == m.in_dim(),
          "mlp_forward: input has " + std::to_string(x.cols()) +
              " columns, expected " + std::to_string(m.in_dim()));
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix cur = x;
  const Index n_layers = m.layer_count();
  for (Index l = 0; l < n_layers; ++l) {
    if (cache != nullptr) cache->inputs.push_back(cur);
    Matrix pre = cur * m.weights[static_cast<std::size_t>(l)].transpose();
    pre.rowwise() += m.biases[static_cast<std::size_t>(l)].transpose();
    if (cache != nullptr) cache->pre.push_back(pre);
    if (l + 1 < n_layers && m.hidden_act != Act::kNone) {
      cur = pre.unaryExpr([&](double v) { return act_apply(m.hidden_act, v); });
    } else {
      cur = std::move(pre);
    }
  }
  return cur;
}

Matrix mlp_backward(const Mlp& m, const MlpCache& cache, const Matrix& d_out,
                    Mlp& grads) {
  const Index n_layers = m.layer_count();
  require(static_cast<Index>(cache.pre.size()) == n_layers,
          "mlp_backward: cache does not match model");
  Matrix d_cur = d_out;
  for (Index l = n_layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    Matrix d_pre;
    if (l + 1 < n_layers && m.hidden_act != Act::kNone) {
      d_pre = d_cur.cwiseProduct(cache.pre[ul].unaryExpr(
          [&](double v) { return act_grad(m.hidden_act, v); }));
    } else {
      d_pre = std::move(d_cur);
    }
    grads.weights[ul].noalias() += d_pre.transpose() * cache.inputs[ul];
    grads.biases[ul].noalias() += d_pre.colwise().sum().transpose();
    d_cur.noalias() = d_pre * m.weights[ul];
  }
  return d_cur;
}

Mlp mlp_zeros_like(const Mlp& m) {
  Mlp z;
  z.hidden_act = m.hidden_act;
  for (const auto& w : m.weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : m.biases) z.biases.push_back(Vector::Zero(b.size()));
  return z;
}

}  // namespace kfno
