#pragma once

#include <Eigen/Core>

namespace tubalreg {

/// A = U * diag(s) * V^H with s sorted nonincreasing.
///
/// Thin factors are m x k and n x k, k = min(m, n). Full factors are square
/// and unitary; columns beyond the numerical rank are completed to an
/// orthonormal basis.
struct ComplexSvd {
  Eigen::MatrixXcd u;
  Eigen::VectorXd s;
  Eigen::MatrixXcd v;
  int sweeps = 0;
};

/// One-sided (Hestenes) Jacobi SVD of a complex matrix.
///
/// Column pairs are rotated until every pair is orthogonal to machine
/// precision; the result has small backward error (about 1e-15 * ||A||).
/// Throws Error(SvdFailure) if `max_sweeps` sweeps do not converge.
ComplexSvd jacobi_svd(const Eigen::MatrixXcd& a, bool full = false, int max_sweeps = 80);

}  // namespace tubalreg
