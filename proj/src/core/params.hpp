/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_PARAMS_HPP
#define KFNO_CORE_PARAMS_HPP

#include "core/common.hpp"
#include "core/mlp.hpp"

namespace kfno {

// A named view over one contiguous run of real parameters. Complex tensors
// appear as interleaved (re, im) doubles, which is exactly how they live in
// memory; every flat offset is therefore one real degree of freedom.
struct ParamBlock {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

struct ParamLayout {
  std::vector<std::pair<std::string, std::size_t>> blocks;
  std::size_t total = 0;

  // Name of the block containing flat offset i.
  const std::string& block_of(std::size_t i) const;
};

// Collects blocks of an MLP in fixed order: layer0.W, layer0.b, layer1.W, ...
void collect_mlp_blocks(Mlp& m, const std::string& prefix,
                        std::vector<ParamBlock>& out);

ParamLayout layout_of(const std::vector<ParamBlock>& blocks);
Vector flatten(const std::vector<ParamBlock>& blocks);
void unflatten(const Vector& v, const std::vector<ParamBlock>& blocks);

}  // namespace kfno

#endif  // KFNO_CORE_PARAMS_HPP
