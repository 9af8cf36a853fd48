#pragma once

#include <vector>

#include <Eigen/Core>

#include "tubalreg/penalty.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg {

/// Tensor SVD A = U * S * V^T.
///
/// `sigma(i, j)` is the i-th singular value of Fourier slice j (0-based);
/// every column is sorted nonincreasing and columns j, d3 - j coincide.
struct TSvd {
  Tensor3 u;  // d1 x d1 x d3, t-orthogonal
  Tensor3 s;  // d1 x d2 x d3, f-diagonal
  Tensor3 v;  // d2 x d2 x d3, t-orthogonal
  Eigen::MatrixXd sigma;
};

/// Thin per-Fourier-slice singular triplets of a real tensor.
///
/// Only the slices 0 .. d3/2 are stored; the rest are their conjugates.
/// This is the working form used by the proximal operator: factors can be
/// recombined with modified singular values by `compose`.
struct SpectralFactors {
  Index d1 = 0;
  Index d2 = 0;
  Index d3 = 0;
  std::vector<Eigen::MatrixXcd> u;  // d1 x k
  std::vector<Eigen::MatrixXcd> v;  // d2 x k
  Eigen::MatrixXd sigma;            // k x d3, k = min(d1, d2)
};

SpectralFactors spectral_factors(const Tensor3& a);

/// Rebuilds the real tensor whose Fourier slice j equals
/// U_j * diag(sigma(:, j)) * V_j^H. `sigma` must keep the conjugate-pair
/// columns equal.
Tensor3 compose(const SpectralFactors& f, const Eigen::MatrixXd& sigma);

TSvd tsvd(const Tensor3& a);

/// Fourier-domain singular values, min(d1, d2) x d3.
Eigen::MatrixXd singular_values(const Tensor3& a);

/// Number of singular tubes i with max_j sigma(i, j) > rel_tol * max sigma.
int tubal_rank(const Tensor3& a, double rel_tol = 1e-8);
int tubal_rank(const Eigen::MatrixXd& sigma, double rel_tol = 1e-8);

/// Tubal nuclear norm (1/d3) * sum_ij sigma_ij.
double ttnn(const Tensor3& a);

/// Weighted tubal nuclear norm (1/d3) * sum_ij w_ij sigma_ij.
double wttnn(const Tensor3& a, const Eigen::MatrixXd& weights);

/// (1/d3) * sum_ij rho(sigma_ij) for the penalty `p`.
double spectral_penalty(const Tensor3& a, const PenaltySpec& p);
double spectral_penalty(const Eigen::MatrixXd& sigma, const PenaltySpec& p);

}  // namespace tubalreg
