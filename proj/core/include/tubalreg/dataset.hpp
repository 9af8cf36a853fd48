#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tubalreg/tensor.hpp"

namespace tubalreg {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n samples (y_i, X_i) with X_i all d1 x d2 x d3.
///
/// Predictors are held as the rows of an n x (d1*d2*d3) design matrix in the
/// tensor's slice-major order, so <X_i, B> for all i is one matrix-vector
/// product against B.vec().
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::span<const Tensor3> x, std::vector<double> y);
  Dataset(Index d1, Index d2, Index d3, RowMatrix design, Eigen::VectorXd y);

  Index n() const noexcept { return y_.size(); }
  Index d1() const noexcept { return d1_; }
  Index d2() const noexcept { return d2_; }
  Index d3() const noexcept { return d3_; }
  Index p() const noexcept { return d1_ * d2_ * d3_; }

  Tensor3 sample(Index i) const;
  const RowMatrix& design() const noexcept { return x_; }
  RowMatrix& design() noexcept { return x_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  Eigen::VectorXd& y() noexcept { return y_; }

  bool conforms(const Tensor3& b) const noexcept {
    return b.d1() == d1_ && b.d2() == d2_ && b.d3() == d3_;
  }
  bool binary_labels() const;

  /// Rows in the given order.
  Dataset subset(std::span<const Index> rows) const;

 private:
  Index d1_ = 0;
  Index d2_ = 0;
  Index d3_ = 0;
  RowMatrix x_;
  Eigen::VectorXd y_;
};

}  // namespace tubalreg
