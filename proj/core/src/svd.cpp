#include "tubalreg/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "tubalreg/error.hpp"

namespace tubalreg {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Complex = std::complex<double>;

// Extends the orthonormal columns [0, filled) of `u` to a full orthonormal
// basis, picking at each step the unit vector with the largest component
// outside the current span (two passes of Gram-Schmidt).
void complete_basis(MatrixXcd& u, Index filled) {
  const Index m = u.rows();
  for (Index col = filled; col < u.cols(); ++col) {
    VectorXcd best;
    double best_norm = -1.0;
    for (Index e = 0; e < m; ++e) {
      VectorXcd x = VectorXcd::Unit(m, e);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < col; ++c) x -= u.col(c).dot(x) * u.col(c);
      }
      const double nrm = x.norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(x);
      }
    }
    u.col(col) = best / best_norm;
  }
}

ComplexSvd jacobi_tall(const MatrixXcd& a, bool full, int max_sweeps) {
  const Index m = a.rows();
  const Index n = a.cols();
  MatrixXcd w = a;
  MatrixXcd v = MatrixXcd::Identity(n, n);
  const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(m));

  std::vector<double> norms(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) norms[j] = w.col(j).squaredNorm();

  int sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == max_sweeps) {
      fail(Errc::SvdFailure, "Jacobi SVD did not converge in " + std::to_string(max_sweeps) +
                                 " sweeps");
    }
    ++sweep;
    rotated = false;
    for (Index i = 0; i + 1 < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double alpha = norms[i];
        const double beta = norms[j];
        if (alpha == 0.0 || beta == 0.0) continue;
        const Complex gamma = w.col(i).dot(w.col(j));
        const double g = std::abs(gamma);
        if (g <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;

        // Rotate column j by the phase of gamma so the pair's inner product is
        // real, then apply a real Jacobi rotation.
        const Complex phase = std::conj(gamma) / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;

        VectorXcd wi = w.col(i);
        VectorXcd wj = w.col(j) * phase;
        w.col(i) = c * wi - s * wj;
        w.col(j) = s * wi + c * wj;

        VectorXcd vi = v.col(i);
        VectorXcd vj = v.col(j) * phase;
        v.col(i) = c * vi - s * vj;
        v.col(j) = s * vi + c * vj;

        norms[i] = w.col(i).squaredNorm();
        norms[j] = w.col(j).squaredNorm();
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return norms[x] > norms[y]; });

  ComplexSvd out;
  out.sweeps = sweep;
  out.s.resize(n);
  out.v.resize(n, n);
  out.u = MatrixXcd::Zero(m, full ? m : n);
  const double smax = n > 0 ? std::sqrt(norms[order[0]]) : 0.0;
  Index filled = 0;
  bool deficient = false;
  for (Index k = 0; k < n; ++k) {
    const Index src = order[k];
    const double sk = std::sqrt(norms[src]);
    out.s(k) = sk;
    out.v.col(k) = v.col(src);
    if (!deficient && sk > 0.0 && sk > smax * 1e-280) {
      out.u.col(k) = w.col(src) / sk;
      filled = k + 1;
    } else {
      deficient = true;
    }
  }
  complete_basis(out.u, filled);
  return out;
}

}  // namespace

ComplexSvd jacobi_svd(const MatrixXcd& a, bool full, int max_sweeps) {
  require(a.allFinite(), Errc::NonFinite, "SVD input has non-finite entries");
  if (a.rows() >= a.cols()) return jacobi_tall(a, full, max_sweeps);
  ComplexSvd t = jacobi_tall(a.adjoint(), full, max_sweeps);
  ComplexSvd out;
  out.sweeps = t.sweeps;
  out.s = std::move(t.s);
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  return out;
}

}  // namespace tubalreg
