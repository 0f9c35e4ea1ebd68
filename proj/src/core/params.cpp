/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/params.hpp"

namespace kfno {

const std::string& ParamLayout::block_of(std::size_t i) const {
  std::size_t off = 0;
  for (const auto& [name, size] : blocks) {
    if (i < off + size) return name;
    off += size;
  }
  throw Error("ParamLayout: offset " + std::to_string(i) + " out of range");
}

void collect_mlp_blocks(Mlp& m, const std::string& prefix,
                        std::vector<ParamBlock>& out) {
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    out.push_back({prefix + ".layer" + std::to_string(l) + ".W",
                   m.weights[l].data(),
                   static_cast<std::size_t>(m.weights[l].size())});
    out.push_back({prefix + ".layer" + std::to_string(l) + ".b",
                   m.biases[l].data(),
                   static_cast<std::size_t>(m.biases[l].size())});
  }
}

ParamLayout layout_of(const std::vector<ParamBlock>& blocks) {
  ParamLayout layout;
  for (const auto& b : blocks) {
    layout.blocks.emplace_back(b.name, b.size);
    layout.total += b.size;
  }
  return layout;
}

Vector flatten(const std::vector<ParamBlock>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size;
  Vector v(static_cast<Index>(total));
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) v(static_cast<Index>(off + i)) = b.data[i];
    off += b.size;
  }
  return v;
}

void unflatten(const Vector& v, const std::vector<ParamBlock>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size;
  require(static_cast<std::size_t>(v.size()) == total,
          "unflatten: vector length " + std::to_string(v.size()) +
              " does not match parameter count " + std::to_string(total));
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) b.data[i] = v(static_cast<Index>(off + i));
    off += b.size;
  }
}

}  // namespace kfno
