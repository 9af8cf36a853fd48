#include <doctest.h>

#include "oracles.hpp"
#include "tubalreg/error.hpp"
#include "tubalreg/loss.hpp"

using namespace tubalreg;
using oracle::Rng;

namespace {

LossSpec spec_for(LossKind k) {
  switch (k) {
    case LossKind::Huber:
      return huber_loss(0.8);
    case LossKind::CLoss:
      return closs(1.5);
    default:
      return LossSpec{k, 0.0};
  }
}

Dataset single(const Tensor3& x, double y) {
  std::vector<Tensor3> xs{x};
  return Dataset(xs, {y});
}

}  // namespace

TEST_CASE("Dataset construction and subset") {
  Rng rng(1);
  std::vector<Tensor3> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(oracle::random_tensor(2, 3, 2, rng));
  const Dataset d(xs, {1, 2, 3, 4});
  CHECK(d.n() == 4);
  CHECK(d.p() == 12);
  CHECK(d.sample(2) == xs[2]);
  const std::vector<Index> rows{3, 1};
  const Dataset s = d.subset(rows);
  CHECK(s.sample(0) == xs[3]);
  CHECK(s.y()(1) == 2.0);
  xs.push_back(Tensor3(2, 2, 2));
  CHECK_THROWS_AS(Dataset(xs, {1, 2, 3, 4, 5}), Error);
  CHECK_THROWS_AS(Dataset(std::span<const Tensor3>(), {}), Error);
}

TEST_CASE("risk values") {
  Rng rng(2);
  const Tensor3 b = oracle::random_tensor(2, 2, 2, rng);
  const Tensor3 x = oracle::random_tensor(2, 2, 2, rng);
  CHECK(risk(squared_loss(), b, single(x, inner(x, b))) == doctest::Approx(0.0));
  CHECK(risk(closs(2.0), b, single(x, inner(x, b))) == 0.0);

  Tensor3 e(1, 1, 1);
  e(0, 0, 0) = 1.0;
  CHECK(risk(huber_loss(1.0), Tensor3(1, 1, 1), single(e, 3.0)) == doctest::Approx(2.5));
  CHECK(risk(closs(2.0), Tensor3(1, 1, 1), single(e, 3.0)) ==
        doctest::Approx(4.0 * (1.0 - std::exp(-9.0 / 4.0))));

  const Dataset cls = oracle::random_dataset(30, 2, 2, 2, b, rng, true);
  CHECK(risk(md_logistic_loss(), Tensor3(2, 2, 2), cls) == doctest::Approx(0.25));
  CHECK(risk(logistic_loss(), Tensor3(2, 2, 2), cls) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradients match central differences") {
  Rng rng(3);
  for (LossKind k : kAllLossKinds) {
    const LossSpec spec = spec_for(k);
    for (int inst = 0; inst < 5; ++inst) {
      const Index n = oracle::uint_in(rng, 5, 20), d = oracle::uint_in(rng, 3, 6);
      const Index d3 = oracle::uint_in(rng, 1, 4);
      const Tensor3 b0 = oracle::random_tensor(d, d, d3, rng, 0.3);
      const Dataset data = oracle::random_dataset(n, d, d, d3, b0, rng, is_classification(k));
      const Tensor3 b = oracle::random_tensor(d, d, d3, rng, 0.3);
      const Tensor3 g = gradient(spec, b, data);
      for (int t = 0; t < 10; ++t) {
        Tensor3 e = oracle::random_tensor(d, d, d3, rng);
        e *= 1.0 / fro_norm(e);
        const double fd = oracle::central_difference(
            [&](double h) { return risk(spec, b + h * e, data); }, 1e-6);
        CHECK(std::abs(fd - inner(g, e)) <= 1e-5 * std::max(1e-3, std::abs(inner(g, e))));
      }
    }
  }
}

TEST_CASE("gradient at a perfect fit vanishes") {
  Rng rng(4);
  const Tensor3 b = oracle::random_tensor(3, 3, 2, rng);
  const Dataset data = oracle::random_dataset(15, 3, 3, 2, b, rng, false, 0.0);
  for (LossKind k : {LossKind::Squared, LossKind::Huber, LossKind::CLoss}) {
    CHECK(fro_norm(gradient(spec_for(k), b, data)) < 1e-12);
  }
}

TEST_CASE("squared gradient by hand on one sample") {
  Tensor3 x(2, 2, 2);
  x(1, 0, 1) = 1.0;
  Tensor3 b(2, 2, 2);
  b(1, 0, 1) = 0.25;
  const Tensor3 g = gradient(squared_loss(), b, single(x, 1.0));
  CHECK(oracle::max_abs_diff(g, -(1.0 - 0.25) * x) < 1e-15);
}

TEST_CASE("Huber and C-loss reduce to squared error") {
  Rng rng(5);
  const Tensor3 b0 = oracle::random_tensor(3, 3, 2, rng);
  const Dataset data = oracle::random_dataset(20, 3, 3, 2, b0, rng, false);
  const Tensor3 b = oracle::random_tensor(3, 3, 2, rng, 0.1);
  const Eigen::VectorXd r = data.y() - data.design() * b.vec();
  const LossSpec hub = huber_loss(r.cwiseAbs().maxCoeff() + 1.0);
  CHECK(std::abs(risk(hub, b, data) - risk(squared_loss(), b, data)) < 1e-12);
  CHECK(oracle::max_abs_diff(gradient(hub, b, data), gradient(squared_loss(), b, data)) < 1e-12);

  // sigma^2 (1 - exp(-r^2 / sigma^2)) tends to r^2, twice the squared loss.
  Tensor3 e(1, 1, 1);
  e(0, 0, 0) = 1.0;
  for (double res : {-10.0, -2.5, 0.3, 7.0}) {
    const double c = risk(closs(1e6), Tensor3(1, 1, 1), single(e, res));
    CHECK(std::abs(c - res * res) <= 1e-6 * res * res);
  }
}

TEST_CASE("C-loss is bounded by sigma squared") {
  Tensor3 e(1, 1, 1);
  e(0, 0, 0) = 1.0;
  for (double res : {1.0, 1e3, 1e12}) CHECK(risk(closs(0.7), Tensor3(1, 1, 1), single(e, res)) <= 0.49);
}

TEST_CASE("MD logistic label symmetry") {
  Rng rng(6);
  const Tensor3 b0 = oracle::random_tensor(3, 3, 2, rng, 0.5);
  Dataset data = oracle::random_dataset(40, 3, 3, 2, b0, rng, true);
  const Tensor3 b = oracle::random_tensor(3, 3, 2, rng, 0.5);
  const double r1 = risk(md_logistic_loss(), b, data);
  data.y() = Eigen::VectorXd::Ones(data.n()) - data.y();
  CHECK(risk(md_logistic_loss(), -1.0 * b, data) == doctest::Approx(r1).epsilon(1e-14));
}

TEST_CASE("compatibility checks") {
  Rng rng(7);
  const Tensor3 b = oracle::random_tensor(2, 2, 2, rng);
  const Dataset reg = oracle::random_dataset(5, 2, 2, 2, b, rng, false);
  CHECK_THROWS_AS(risk(logistic_loss(), b, reg), Error);
  try {
    risk(md_logistic_loss(), b, reg);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonBinaryLabel);
  }
  CHECK_THROWS_AS(risk(squared_loss(), Tensor3(2, 2, 3), reg), Error);
  CHECK_THROWS_AS(huber_loss(0.0), Error);
  CHECK_THROWS_AS(closs(-1.0), Error);
}

TEST_CASE("adaptive Huber cutoff") {
  CHECK(adaptive_huber_upsilon(60, 20, 3, 0.5, 1.7) == doctest::Approx(1.7));
  CHECK(adaptive_huber_upsilon(4 * 20 * 3, 20, 3, 1.0, 1.0) == doctest::Approx(2.0));
  CHECK(adaptive_huber_upsilon(2000, 20, 3, 1.0, 1.0) == doctest::Approx(5.7735).epsilon(1e-4));
  CHECK_THROWS_AS(adaptive_huber_upsilon(10, 2, 2, 0.0, 1.0), Error);
  CHECK_THROWS_AS(adaptive_huber_upsilon(10, 2, 2, 1.0, 0.0), Error);
}

TEST_CASE("prediction error") {
  Rng rng(8);
  const Tensor3 b0 = oracle::random_tensor(3, 3, 2, rng, 0.5);
  const Dataset data = oracle::random_dataset(25, 3, 3, 2, b0, rng, false);
  const Tensor3 bh = b0 + oracle::random_tensor(3, 3, 2, rng, 0.2);
  CHECK(prediction_error(squared_loss(), b0, b0, data) == 0.0);
  const Eigen::VectorXd q = data.design() * (bh - b0).vec();
  CHECK(std::abs(prediction_error(squared_loss(), bh, b0, data) - q.squaredNorm() / 25) < 1e-10);
  for (int t = 0; t < 10; ++t) {
    const Tensor3 b = oracle::random_tensor(3, 3, 2, rng);
    CHECK(prediction_error(squared_loss(), b, b0, data) >= 0.0);
  }

  // Symmetrized Bregman divergence of psi(s) = log(1 + e^s).
  const Dataset cls = oracle::random_dataset(25, 3, 3, 2, b0, rng, true);
  auto psi = [](double s) { return std::log1p(std::exp(s)); };
  auto dpsi = [](double s) { return 1.0 / (1.0 + std::exp(-s)); };
  const Eigen::VectorXd sh = cls.design() * bh.vec(), s0 = cls.design() * b0.vec();
  double breg = 0.0;
  for (Index i = 0; i < 25; ++i) {
    breg += psi(sh(i)) - psi(s0(i)) - dpsi(s0(i)) * (sh(i) - s0(i));
    breg += psi(s0(i)) - psi(sh(i)) - dpsi(sh(i)) * (s0(i) - sh(i));
  }
  CHECK(prediction_error(logistic_loss(), bh, b0, cls) == doctest::Approx(breg / 25).epsilon(1e-10));
}

TEST_CASE("predict") {
  Rng rng(9);
  const Tensor3 b = oracle::random_tensor(3, 3, 2, rng);
  CHECK(predict(logistic_loss(), Tensor3(3, 3, 2), b) == 1.0);
  CHECK(predict(squared_loss(), b, (1.0 / fro_norm(b)) * b) == doctest::Approx(fro_norm(b)));
  CHECK(predict(md_logistic_loss(), b, 100.0 * b) == 1.0);
  CHECK(predict(md_logistic_loss(), b, -100.0 * b) == 0.0);
}

TEST_CASE("parse and format") {
  CHECK(parse_loss("huber(upsilon=1.5)").param == 1.5);
  CHECK(parse_loss("closs(sigma=2)").kind == LossKind::CLoss);
  CHECK(parse_loss("logistic").kind == LossKind::LogisticMLE);
  CHECK(parse_loss("mdlogistic").kind == LossKind::MDLogistic);
  CHECK(parse_loss(format_loss(huber_loss(0.25))).param == 0.25);
  CHECK_THROWS_AS(parse_loss("quantile"), Error);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}
