/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef KFNO_CORE_EIG_HPP
#define KFNO_CORE_EIG_HPP

#include "core/common.hpp"

namespace kfno {

// Dense eigendecomposition of a real square matrix. values(i) pairs with the
// unit-norm column vectors.col(i); complex eigenvalues appear in conjugate
// pairs because the input is real.
struct EigenPair {
  ComplexVector values;
  ComplexMatrix vectors;
};

// Throws Error on convergence failure, or when the residual
// max|A*S - S*D| exceeds 1e-8 * max|A| (the message carries the residual).
EigenPair eig(const Matrix& a);

// Residual of the eigenvector equation, max-norm.
double eig_residual(const Matrix& a, const EigenPair& ep);

}  // namespace kfno

#endif  // KFNO_CORE_EIG_HPP
