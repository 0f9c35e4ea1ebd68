/* Copyright (c) The KFNO Project Contributors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "core/eig.hpp"

#include <Eigen/Eigenvalues>

namespace kfno {

double eig_residual(const Matrix& a, const EigenPair& ep) {
  ComplexMatrix lhs = a.cast<std::complex<double>>() * ep.vectors;
  ComplexMatrix rhs = ep.vectors * ep.values.asDiagonal();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

EigenPair eig(const Matrix& a) {
  require(a.rows() == a.cols(), "eig: matrix must be square, got " +
                                    std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()));
  require(a.allFinite(), "eig: matrix contains non-finite entries");
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/true);
  require(solver.info() == Eigen::Success, "eig: QR iteration failed to converge");
  EigenPair ep;
  ep.values = solver.eigenvalues();
  ep.vectors = solver.eigenvectors();
  const double scale = a.cwiseAbs().maxCoeff();
  const double residual = eig_residual(a, ep);
  if (residual > 1e-8 * std::max(scale, 1e-300)) {
    throw Error("eig: residual max|A*S - S*D| = " + format_double(residual) +
                " exceeds tolerance " + format_double(1e-8 * scale));
  }
  return ep;
}

}  // namespace kfno
