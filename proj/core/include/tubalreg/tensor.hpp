#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tubalreg {

using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Dense real d1 x d2 x d3 array.
///
/// Storage is slice-major: entry (i, j, k) lives at i + d1 * (j + d2 * k),
/// so every frontal slice A(:, :, k) is a contiguous column-major d1 x d2
/// block and can be viewed as an Eigen matrix without copying.
class Tensor3 {
 public:
  using SliceMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstSliceMap = Eigen::Map<const Eigen::MatrixXd>;

  Tensor3() = default;
  /// Zero tensor. Dimensions must be positive.
  Tensor3(Index d1, Index d2, Index d3);
  /// Takes ownership of `data` (slice-major). Rejects wrong lengths and
  /// non-finite entries.
  Tensor3(Index d1, Index d2, Index d3, std::vector<double> data);

  /// Identity first frontal slice, zeros elsewhere: the unit of the t-product.
  static Tensor3 identity(Index d, Index d3);

  Index d1() const noexcept { return d1_; }
  Index d2() const noexcept { return d2_; }
  Index d3() const noexcept { return d3_; }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Tensor3& other) const noexcept {
    return d1_ == other.d1_ && d2_ == other.d2_ && d3_ == other.d3_;
  }

  double& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  double operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  SliceMap slice(Index k);
  ConstSliceMap slice(Index k) const;

  Eigen::Map<Eigen::VectorXd> vec();
  Eigen::Map<const Eigen::VectorXd> vec() const;

  Tensor3& operator+=(const Tensor3& rhs);
  Tensor3& operator-=(const Tensor3& rhs);
  Tensor3& operator*=(double s);

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t offset(Index i, Index j, Index k) const noexcept {
    return static_cast<std::size_t>(i + d1_ * (j + d2_ * k));
  }

  Index d1_ = 0;
  Index d2_ = 0;
  Index d3_ = 0;
  std::vector<double> data_;
};

Tensor3 operator+(Tensor3 lhs, const Tensor3& rhs);
Tensor3 operator-(Tensor3 lhs, const Tensor3& rhs);
Tensor3 operator*(double s, Tensor3 rhs);
Tensor3 operator*(Tensor3 lhs, double s);

/// Mode-3 DFT of a real tensor: d3 complex d1 x d2 frontal slices.
/// Slice j and slice d3 - j (0-based, j >= 1) are complex conjugates.
struct FourierSlices {
  Index d1 = 0;
  Index d2 = 0;
  Index d3 = 0;
  std::vector<Eigen::MatrixXcd> slices;
};

/// Unnormalized forward DFT along mode 3 of every tube.
FourierSlices dft3(const Tensor3& a);

/// Inverse DFT along mode 3, scaled by 1/d3. Slices are symmetrized first;
/// a conjugate-symmetry residual above 1e-8 (relative) raises
/// SymmetryViolation.
Tensor3 idft3(const FourierSlices& f);

/// Largest |F_j - conj(F_{d3-j})| entry, relative to max(1, max |F|).
double symmetry_residual(const FourierSlices& f);

/// t-product: per-Fourier-slice matrix product, mapped back to real space.
Tensor3 tprod(const Tensor3& a, const Tensor3& b);

/// t-transpose: transpose each frontal slice, reverse the order of slices 2..d3.
Tensor3 ttranspose(const Tensor3& a);

double inner(const Tensor3& a, const Tensor3& b);
double fro_norm(const Tensor3& a);

}  // namespace tubalreg
