#include "tubalreg/tsvd.hpp"

#include <algorithm>
#include <string>

#include "tubalreg/error.hpp"
#include "tubalreg/svd.hpp"

namespace tubalreg {

namespace {

ComplexSvd slice_svd(const Eigen::MatrixXcd& slice, Index k, bool full) {
  try {
    return jacobi_svd(slice, full);
  } catch (const Error& e) {
    if (e.code() != Errc::SvdFailure) throw;
    fail(Errc::SvdFailure, "Fourier slice " + std::to_string(k) + ": " + e.what());
  }
}

// Maps per-slice complex matrices (first half only) back to a real tensor.
Tensor3 from_half_slices(std::vector<Eigen::MatrixXcd> half, Index d3) {
  const Index rows = half.front().rows();
  const Index cols = half.front().cols();
  FourierSlices f{rows, cols, d3, std::move(half)};
  f.slices.resize(static_cast<std::size_t>(d3));
  for (Index k = d3 / 2 + 1; k < d3; ++k) f.slices[k] = f.slices[d3 - k].conjugate();
  return idft3(f);
}

}  // namespace

SpectralFactors spectral_factors(const Tensor3& a) {
  FourierSlices f = dft3(a);
  const Index d3 = a.d3();
  const Index half = d3 / 2 + 1;
  const Index k = std::min(a.d1(), a.d2());

  SpectralFactors out{a.d1(), a.d2(), d3, {}, {}, Eigen::MatrixXd(k, d3)};
  out.u.reserve(static_cast<std::size_t>(half));
  out.v.reserve(static_cast<std::size_t>(half));
  for (Index j = 0; j < half; ++j) {
    ComplexSvd svd = slice_svd(f.slices[j], j, false);
    out.sigma.col(j) = svd.s;
    out.u.push_back(std::move(svd.u));
    out.v.push_back(std::move(svd.v));
  }
  for (Index j = half; j < d3; ++j) out.sigma.col(j) = out.sigma.col(d3 - j);
  return out;
}

Tensor3 compose(const SpectralFactors& f, const Eigen::MatrixXd& sigma) {
  const Index k = std::min(f.d1, f.d2);
  require(sigma.rows() == k && sigma.cols() == f.d3, Errc::DimMismatch,
          "singular value matrix shape does not match the factors");
  const Index half = f.d3 / 2 + 1;
  std::vector<Eigen::MatrixXcd> slices;
  slices.reserve(static_cast<std::size_t>(half));
  for (Index j = 0; j < half; ++j) {
    slices.push_back(f.u[j] * sigma.col(j).cast<Complex>().asDiagonal() * f.v[j].adjoint());
  }
  return from_half_slices(std::move(slices), f.d3);
}

TSvd tsvd(const Tensor3& a) {
  FourierSlices f = dft3(a);
  const Index d1 = a.d1(), d2 = a.d2(), d3 = a.d3();
  const Index half = d3 / 2 + 1;
  const Index k = std::min(d1, d2);

  TSvd out;
  out.sigma.resize(k, d3);
  std::vector<Eigen::MatrixXcd> us, ss, vs;
  for (Index j = 0; j < half; ++j) {
    ComplexSvd svd = slice_svd(f.slices[j], j, true);
    out.sigma.col(j) = svd.s;
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(d1, d2);
    for (Index i = 0; i < k; ++i) diag(i, i) = svd.s(i);
    us.push_back(std::move(svd.u));
    ss.push_back(std::move(diag));
    vs.push_back(std::move(svd.v));
  }
  for (Index j = half; j < d3; ++j) out.sigma.col(j) = out.sigma.col(d3 - j);
  out.u = from_half_slices(std::move(us), d3);
  out.s = from_half_slices(std::move(ss), d3);
  out.v = from_half_slices(std::move(vs), d3);
  return out;
}

Eigen::MatrixXd singular_values(const Tensor3& a) { return spectral_factors(a).sigma; }

int tubal_rank(const Eigen::MatrixXd& sigma, double rel_tol) {
  require(rel_tol > 0.0, Errc::DomainError, "rank tolerance must be positive");
  if (sigma.size() == 0) return 0;
  const double smax = sigma.maxCoeff();
  if (smax <= 0.0) return 0;
  const Eigen::VectorXd tube_max = sigma.rowwise().maxCoeff();
  return static_cast<int>((tube_max.array() > rel_tol * smax).count());
}

int tubal_rank(const Tensor3& a, double rel_tol) {
  return tubal_rank(singular_values(a), rel_tol);
}

double ttnn(const Tensor3& a) {
  return singular_values(a).sum() / static_cast<double>(a.d3());
}

double wttnn(const Tensor3& a, const Eigen::MatrixXd& weights) {
  const Eigen::MatrixXd sigma = singular_values(a);
  require(weights.rows() == sigma.rows() && weights.cols() == sigma.cols(), Errc::DimMismatch,
          "weight matrix must be min(d1,d2) x d3");
  require((weights.array() >= 0.0).all(), Errc::NegativeWeight, "weights must be nonnegative");
  return weights.cwiseProduct(sigma).sum() / static_cast<double>(a.d3());
}

double spectral_penalty(const Eigen::MatrixXd& sigma, const PenaltySpec& p) {
  double total = 0.0;
  for (Index j = 0; j < sigma.cols(); ++j) {
    for (Index i = 0; i < sigma.rows(); ++i) total += value(p, sigma(i, j));
  }
  return total / static_cast<double>(sigma.cols());
}

double spectral_penalty(const Tensor3& a, const PenaltySpec& p) {
  return spectral_penalty(singular_values(a), p);
}

}  // namespace tubalreg
