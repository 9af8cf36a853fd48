#include "tubalreg/dataset.hpp"

#include <string>

#include "tubalreg/error.hpp"

namespace tubalreg {

Dataset::Dataset(std::span<const Tensor3> x, std::vector<double> y) {
  require(!x.empty(), Errc::BadParameter, "dataset needs at least one sample");
  require(x.size() == y.size(), Errc::DimMismatch,
          std::to_string(x.size()) + " predictors but " + std::to_string(y.size()) + " responses");
  d1_ = x.front().d1();
  d2_ = x.front().d2();
  d3_ = x.front().d3();
  x_.resize(static_cast<Index>(x.size()), p());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(conforms(x[i]), Errc::DimMismatch, "sample " + std::to_string(i) + " has other dims");
    x_.row(static_cast<Index>(i)) = x[i].vec().transpose();
  }
  y_ = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Index>(y.size()));
  require(y_.allFinite(), Errc::NonFinite, "responses must be finite");
}

Dataset::Dataset(Index d1, Index d2, Index d3, RowMatrix design, Eigen::VectorXd y)
    : d1_(d1), d2_(d2), d3_(d3), x_(std::move(design)), y_(std::move(y)) {
  require(d1 > 0 && d2 > 0 && d3 > 0, Errc::BadParameter, "dimensions must be positive");
  require(y_.size() >= 1, Errc::BadParameter, "dataset needs at least one sample");
  require(x_.rows() == y_.size() && x_.cols() == p(), Errc::DimMismatch,
          "design matrix must be n x d1*d2*d3");
  require(x_.allFinite() && y_.allFinite(), Errc::NonFinite, "dataset entries must be finite");
}

Tensor3 Dataset::sample(Index i) const {
  std::vector<double> data(static_cast<std::size_t>(p()));
  Eigen::Map<Eigen::RowVectorXd>(data.data(), p()) = x_.row(i);
  return Tensor3(d1_, d2_, d3_, std::move(data));
}

bool Dataset::binary_labels() const {
  return ((y_.array() == 0.0) || (y_.array() == 1.0)).all();
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  RowMatrix x(static_cast<Index>(rows.size()), p());
  Eigen::VectorXd y(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < n(), Errc::BadParameter, "subset row out of range");
    x.row(static_cast<Index>(r)) = x_.row(rows[r]);
    y(static_cast<Index>(r)) = y_(rows[r]);
  }
  return Dataset(d1_, d2_, d3_, std::move(x), std::move(y));
}

}  // namespace tubalreg
