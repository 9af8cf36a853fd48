#include "tubalreg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include <fftw3.h>

#include "tubalreg/error.hpp"

namespace tubalreg {

namespace {

std::string dims_str(Index d1, Index d2, Index d3) {
  return std::to_string(d1) + "x" + std::to_string(d2) + "x" + std::to_string(d3);
}

// FFTW's planner is not reentrant; execution with new arrays is. Plans are
// created once per (tube count, tube length) and live for the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan forward(int howmany, int n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(howmany, n);
    if (auto it = forward_.find(key); it != forward_.end()) return it->second;
    const int half = n / 2 + 1;
    double* in = fftw_alloc_real(static_cast<std::size_t>(howmany) * n);
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(howmany) * half);
    fftw_plan plan = fftw_plan_many_dft_r2c(1, &n, howmany, in, nullptr, howmany, 1, out,
                                            nullptr, howmany, 1,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    forward_.emplace(key, plan);
    return plan;
  }

  fftw_plan backward(int howmany, int n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(howmany, n);
    if (auto it = backward_.find(key); it != backward_.end()) return it->second;
    const int half = n / 2 + 1;
    fftw_complex* in = fftw_alloc_complex(static_cast<std::size_t>(howmany) * half);
    double* out = fftw_alloc_real(static_cast<std::size_t>(howmany) * n);
    fftw_plan plan = fftw_plan_many_dft_c2r(1, &n, howmany, in, nullptr, howmany, 1, out,
                                            nullptr, howmany, 1,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
    fftw_free(in);
    fftw_free(out);
    backward_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> forward_;
  std::map<std::pair<int, int>, fftw_plan> backward_;
};

void check_dims(Index d1, Index d2, Index d3) {
  require(d1 > 0 && d2 > 0 && d3 > 0, Errc::BadParameter,
          "tensor dimensions must be positive, got " + dims_str(d1, d2, d3));
}

}  // namespace

Tensor3::Tensor3(Index d1, Index d2, Index d3) : d1_(d1), d2_(d2), d3_(d3) {
  check_dims(d1, d2, d3);
  data_.assign(static_cast<std::size_t>(d1 * d2 * d3), 0.0);
}

Tensor3::Tensor3(Index d1, Index d2, Index d3, std::vector<double> data)
    : d1_(d1), d2_(d2), d3_(d3), data_(std::move(data)) {
  check_dims(d1, d2, d3);
  require(static_cast<Index>(data_.size()) == d1 * d2 * d3, Errc::DimMismatch,
          "data length " + std::to_string(data_.size()) + " does not match " +
              dims_str(d1, d2, d3));
  require(std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }),
          Errc::NonFinite, "tensor entries must be finite");
}

Tensor3 Tensor3::identity(Index d, Index d3) {
  Tensor3 t(d, d, d3);
  for (Index i = 0; i < d; ++i) t(i, i, 0) = 1.0;
  return t;
}

Tensor3::SliceMap Tensor3::slice(Index k) {
  return SliceMap(data_.data() + static_cast<std::size_t>(k * d1_ * d2_), d1_, d2_);
}

Tensor3::ConstSliceMap Tensor3::slice(Index k) const {
  return ConstSliceMap(data_.data() + static_cast<std::size_t>(k * d1_ * d2_), d1_, d2_);
}

Eigen::Map<Eigen::VectorXd> Tensor3::vec() {
  return Eigen::Map<Eigen::VectorXd>(data_.data(), size());
}

Eigen::Map<const Eigen::VectorXd> Tensor3::vec() const {
  return Eigen::Map<const Eigen::VectorXd>(data_.data(), size());
}

Tensor3& Tensor3::operator+=(const Tensor3& rhs) {
  require(same_shape(rhs), Errc::DimMismatch, "tensor addition");
  vec() += rhs.vec();
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& rhs) {
  require(same_shape(rhs), Errc::DimMismatch, "tensor subtraction");
  vec() -= rhs.vec();
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  vec() *= s;
  return *this;
}

Tensor3 operator+(Tensor3 lhs, const Tensor3& rhs) { return lhs += rhs; }
Tensor3 operator-(Tensor3 lhs, const Tensor3& rhs) { return lhs -= rhs; }
Tensor3 operator*(double s, Tensor3 rhs) { return rhs *= s; }
Tensor3 operator*(Tensor3 lhs, double s) { return lhs *= s; }

FourierSlices dft3(const Tensor3& a) {
  const Index d1 = a.d1(), d2 = a.d2(), d3 = a.d3();
  const Index m = d1 * d2;
  const Index half = d3 / 2 + 1;

  std::vector<Complex> buf(static_cast<std::size_t>(m * half));
  fftw_plan plan = PlanCache::instance().forward(static_cast<int>(m), static_cast<int>(d3));
  // FFTW only reads the input of an r2c transform.
  fftw_execute_dft_r2c(plan, const_cast<double*>(a.data().data()),
                       reinterpret_cast<fftw_complex*>(buf.data()));

  FourierSlices f{d1, d2, d3, {}};
  f.slices.resize(static_cast<std::size_t>(d3));
  for (Index k = 0; k < half; ++k) {
    f.slices[k] = Eigen::Map<const Eigen::MatrixXcd>(buf.data() + k * m, d1, d2);
  }
  for (Index k = half; k < d3; ++k) f.slices[k] = f.slices[d3 - k].conjugate();
  return f;
}

double symmetry_residual(const FourierSlices& f) {
  double scale = 1.0;
  for (const auto& s : f.slices) scale = std::max(scale, s.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Index k = 0; k < f.d3; ++k) {
    const Index mirror = (f.d3 - k) % f.d3;
    if (mirror < k) continue;
    const double r = (f.slices[k] - f.slices[mirror].conjugate()).cwiseAbs().maxCoeff();
    worst = std::max(worst, r);
  }
  return worst / scale;
}

Tensor3 idft3(const FourierSlices& f) {
  const Index d1 = f.d1, d2 = f.d2, d3 = f.d3;
  require(static_cast<Index>(f.slices.size()) == d3, Errc::DimMismatch,
          "FourierSlices holds " + std::to_string(f.slices.size()) + " slices, expected " +
              std::to_string(d3));
  for (const auto& s : f.slices) {
    require(s.rows() == d1 && s.cols() == d2, Errc::DimMismatch, "Fourier slice shape");
  }
  const double residual = symmetry_residual(f);
  require(residual <= 1e-8, Errc::SymmetryViolation,
          "conjugate-symmetry residual " + std::to_string(residual) + " exceeds 1e-8");

  const Index m = d1 * d2;
  const Index half = d3 / 2 + 1;
  std::vector<Complex> buf(static_cast<std::size_t>(m * half));
  for (Index k = 0; k < half; ++k) {
    Eigen::Map<Eigen::MatrixXcd> dst(buf.data() + k * m, d1, d2);
    const Index mirror = (d3 - k) % d3;
    if (mirror == k) {
      dst = f.slices[k].real().cast<Complex>();
    } else {
      dst = 0.5 * (f.slices[k] + f.slices[mirror].conjugate());
    }
  }

  Tensor3 out(d1, d2, d3);
  fftw_plan plan = PlanCache::instance().backward(static_cast<int>(m), static_cast<int>(d3));
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(buf.data()), out.data().data());
  out *= 1.0 / static_cast<double>(d3);
  return out;
}

Tensor3 tprod(const Tensor3& a, const Tensor3& b) {
  require(a.d2() == b.d1() && a.d3() == b.d3(), Errc::DimMismatch,
          "t-product of " + dims_str(a.d1(), a.d2(), a.d3()) + " and " +
              dims_str(b.d1(), b.d2(), b.d3()));
  const Index d3 = a.d3();
  FourierSlices fa = dft3(a);
  FourierSlices fb = dft3(b);
  FourierSlices fc{a.d1(), b.d2(), d3, {}};
  fc.slices.resize(static_cast<std::size_t>(d3));
  const Index half = d3 / 2 + 1;
  for (Index k = 0; k < half; ++k) fc.slices[k].noalias() = fa.slices[k] * fb.slices[k];
  for (Index k = half; k < d3; ++k) fc.slices[k] = fc.slices[d3 - k].conjugate();
  return idft3(fc);
}

Tensor3 ttranspose(const Tensor3& a) {
  const Index d3 = a.d3();
  Tensor3 out(a.d2(), a.d1(), d3);
  for (Index k = 0; k < d3; ++k) {
    const Index src = (d3 - k) % d3;
    out.slice(k) = a.slice(src).transpose();
  }
  return out;
}

double inner(const Tensor3& a, const Tensor3& b) {
  require(a.same_shape(b), Errc::DimMismatch, "inner product of differently shaped tensors");
  return a.vec().dot(b.vec());
}

double fro_norm(const Tensor3& a) { return a.vec().norm(); }

}  // namespace tubalreg
