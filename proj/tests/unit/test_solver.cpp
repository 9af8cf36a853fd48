#include <doctest.h>

#include "oracles.hpp"
#include "tubalreg/error.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/solver.hpp"
#include "tubalreg/tsvd.hpp"

using namespace tubalreg;
using oracle::Rng;

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.kappa = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.eta_min = 2e12;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("weights from singular values") {
  Eigen::MatrixXd s(3, 1);
  s << 3, 1, 0;
  const Eigen::MatrixXd w = weights_from_singulars(s, make_penalty(PenaltyKind::MCP, 1, 2));
  CHECK(w(0, 0) == 0.0);
  CHECK(w(1, 0) == doctest::Approx(0.5));
  CHECK(w(2, 0) == 1.0);
  const Eigen::MatrixXd t = weights_from_singulars(s, make_penalty(PenaltyKind::TTNN, 0.4));
  CHECK((t.array() == 0.4).all());
  for (PenaltyKind k : kAllPenaltyKinds) {
    const PenaltySpec p = make_penalty(k, 0.9, 3.0);
    const Eigen::MatrixXd z = weights_from_singulars(Eigen::MatrixXd::Zero(2, 3), p);
    CHECK((z.array() == constants(p).c_rho_prime).all());
  }
}

TEST_CASE("weighted t-SVT") {
  Rng rng(1);
  const Tensor3 g = oracle::random_tensor(4, 5, 3, rng);
  CHECK(weighted_tsvt(g, Eigen::MatrixXd::Zero(4, 3), 0.5) == g);

  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 3, 0.8);
  CHECK(oracle::max_abs_diff(weighted_tsvt(g, c, 0.7), oracle::svt(g, c, 0.7)) < 1e-10);

  const double smax = singular_values(g).maxCoeff();
  CHECK(fro_norm(weighted_tsvt(g, Eigen::MatrixXd::Constant(4, 3, 2 * smax), 1.0)) == 0.0);

  for (int t = 0; t < 20; ++t) {
    const Index d3 = oracle::uint_in(rng, 1, 5);
    const Tensor3 h = oracle::random_tensor(oracle::uint_in(rng, 1, 6), oracle::uint_in(rng, 1, 6),
                                            d3, rng);
    const Index k = std::min(h.d1(), h.d2());
    const Eigen::MatrixXd w = oracle::monotone_weights(k, d3, rng, 0.7);
    const ProxResult pr = weighted_tsvt_with_sigma(h, w, 0.9);
    CHECK(oracle::max_abs_diff(pr.b, oracle::svt(h, w, 0.9)) < 1e-10);
    CHECK((pr.sigma - singular_values(pr.b)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("weighted t-SVT is a local minimizer of its subproblem") {
  Rng rng(2);
  const Tensor3 g = oracle::random_tensor(4, 4, 3, rng);
  const Eigen::MatrixXd w = oracle::monotone_weights(4, 3, rng, 0.5);
  const double eta = 1.3;
  const Tensor3 b = weighted_tsvt(g, w, 1.0 / eta);
  auto obj = [&](const Tensor3& x) {
    return wttnn(x, w) / eta + 0.5 * std::pow(fro_norm(x - g), 2);
  };
  const double best = obj(b);
  for (int t = 0; t < 200; ++t) {
    const double eps = t % 2 ? 1e-3 : 1e-2;
    CHECK(best <= obj(b + eps * oracle::random_tensor(4, 4, 3, rng)) + 1e-14);
  }
}

TEST_CASE("Barzilai-Borwein initialization") {
  Rng rng(3);
  SolverConfig cfg;
  const Tensor3 b0 = oracle::random_tensor(2, 3, 2, rng);
  const Tensor3 d = oracle::random_tensor(2, 3, 2, rng);
  const Tensor3 g0 = oracle::random_tensor(2, 3, 2, rng);
  CHECK(bb_init(b0 + d, b0, g0 + 3.0 * d, g0, cfg) == doctest::Approx(3.0));
  CHECK(bb_init(b0, b0, g0 + d, g0, cfg) == cfg.eta0);
  CHECK(bb_init(b0, b0, g0 + d, g0, cfg, 4.5) == 4.5);
  CHECK(bb_init(b0 + d, b0, g0 - d, g0, cfg, 4.5) == 4.5);
  CHECK(bb_init(b0 + d, b0, g0 + 1e20 * d, g0, cfg) == cfg.eta_max);

  // Squared loss: the ratio is a Rayleigh quotient of the Gram matrix.
  const Tensor3 bt = oracle::random_tensor(2, 2, 2, rng);
  const Dataset data = oracle::random_dataset(60, 2, 2, 2, bt, rng, false);
  const Eigen::MatrixXd gram = data.design().transpose() * data.design() / 60.0;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues();
  for (int t = 0; t < 20; ++t) {
    const Tensor3 b1 = oracle::random_tensor(2, 2, 2, rng);
    const Tensor3 b2 = oracle::random_tensor(2, 2, 2, rng);
    const double eta = bb_init(b2, b1, gradient(squared_loss(), b2, data),
                               gradient(squared_loss(), b1, data), cfg);
    CHECK(eta >= ev.minCoeff() - 1e-12);
    CHECK(eta <= ev.maxCoeff() + 1e-12);
  }
}

TEST_CASE("objective") {
  Rng rng(4);
  const Tensor3 b0 = oracle::random_tensor(3, 3, 2, rng);
  const Dataset data = oracle::random_dataset(20, 3, 3, 2, b0, rng, false);
  const PenaltySpec tt = make_penalty(PenaltyKind::TTNN, 0.3);
  CHECK(objective(Tensor3(3, 3, 2), squared_loss(), data, tt) ==
        doctest::Approx(data.y().squaredNorm() / 40.0));
  const Tensor3 b = oracle::random_tensor(3, 3, 2, rng);
  CHECK(objective(b, squared_loss(), data, tt) ==
        doctest::Approx(risk(squared_loss(), b, data) + 0.3 * ttnn(b)).epsilon(1e-12));
  const PenaltySpec scad = make_penalty(PenaltyKind::SCAD, 0.5, 3.7);
  double pen = 0.0;
  const Eigen::MatrixXd s = oracle::fourier_svals(b);
  for (Index i = 0; i < s.size(); ++i) pen += oracle::penalty_value(PenaltyKind::SCAD, 0.5, 3.7, s.data()[i]);
  CHECK(std::abs(objective(b, huber_loss(1.0), data, scad) -
                 (risk(huber_loss(1.0), b, data) + pen / 2.0)) < 1e-12);
}

TEST_CASE("step at a fixed point does not move") {
  Rng rng(5);
  // Singular values far past the MCP knee get zero weight.
  const Tensor3 b0 = tprod(oracle::random_tensor(3, 2, 2, rng), oracle::random_tensor(2, 3, 2, rng));
  const Dataset data = oracle::random_dataset(50, 3, 3, 2, b0, rng, false, 0.0);
  const Eigen::MatrixXd s = singular_values(b0);
  double smin = 1e300;
  for (Index j = 0; j < 2; ++j) smin = std::min({smin, s(0, j), s(1, j)});
  const PenaltySpec p = make_penalty(PenaltyKind::MCP, smin / 10, 2.0);
  const StepResult r = step(b0, s, 1.0, squared_loss(), data, p, SolverConfig{});
  CHECK(r.accepted);
  CHECK(r.backtracks == 0);
  CHECK(fro_norm(r.b_next - b0) < 1e-12);
}

TEST_CASE("monotone search criterion on a one-sample quadratic") {
  Rng rng(6);
  const Tensor3 x = oracle::random_tensor(2, 2, 2, rng);
  std::vector<Tensor3> xs{x};
  const Dataset data(xs, {2.0});
  const double lmax = std::pow(fro_norm(x), 2);
  SolverConfig cfg;
  const PenaltySpec p = make_penalty(PenaltyKind::TTNN, 0.05);
  const Tensor3 b = oracle::random_tensor(2, 2, 2, rng);
  const Eigen::MatrixXd s = singular_values(b);
  const StepResult ok = step(b, s, lmax / (1 - cfg.alpha), squared_loss(), data, p, cfg);
  CHECK(ok.accepted);
  CHECK(ok.backtracks == 0);
  const StepResult bt = step(b, s, 1e-3, squared_loss(), data, p, cfg);
  CHECK(bt.accepted);
  CHECK(bt.eta <= cfg.kappa * lmax / (1 - cfg.alpha));
  CHECK(bt.objective + 0.5 * cfg.alpha * bt.eta * std::pow(fro_norm(bt.b_next - b), 2) <=
        objective(b, squared_loss(), data, p));
}

TEST_CASE("steps never increase the objective") {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const LossKind k = kAllLossKinds[t % 5];
    const PenaltyKind pk = kAllPenaltyKinds[t % 7];
    const LossSpec loss = k == LossKind::Huber ? huber_loss(1.0)
                          : k == LossKind::CLoss ? closs(2.0)
                                                 : LossSpec{k, 0.0};
    const Index d = oracle::uint_in(rng, 2, 4), d3 = oracle::uint_in(rng, 1, 3);
    const Tensor3 b0 = oracle::random_tensor(d, d, d3, rng, 0.5);
    const Dataset data = oracle::random_dataset(30, d, d, d3, b0, rng, is_classification(k));
    const PenaltySpec p = make_penalty(pk, oracle::unif(rng, 0.01, 0.5), 3.0);
    const Tensor3 b = oracle::random_tensor(d, d, d3, rng, 0.5);
    const StepResult r = step(b, singular_values(b), oracle::unif(rng, 0.1, 5), loss, data, p,
                              SolverConfig{});
    CHECK(r.objective <= objective(b, loss, data, p));
  }
}

TEST_CASE("fit with zero lambda reproduces least squares") {
  Rng rng(8);
  const Tensor3 b0 = oracle::random_tensor(3, 3, 2, rng);
  const Dataset data = oracle::random_dataset(60, 3, 3, 2, b0, rng, false, 0.0);
  SolverConfig cfg;
  cfg.eps_tol = 1e-10;
  cfg.max_iter = 5000;
  const FitResult f = fit(data, squared_loss(), make_penalty(PenaltyKind::TTNN, 0.0), cfg,
                          Tensor3(3, 3, 2));
  Tensor3 bols(3, 3, 2);
  bols.vec() = oracle::ols(data);
  CHECK(risk(squared_loss(), f.b_hat, data) <= risk(squared_loss(), bols, data) + 1e-8);
  CHECK(f.converged);
}

TEST_CASE("fit on all-zero responses stops at once") {
  Rng rng(9);
  Dataset data = oracle::random_dataset(20, 3, 3, 2, Tensor3(3, 3, 2), rng, false, 0.0);
  const FitResult f = fit(data, squared_loss(), make_penalty(PenaltyKind::MCP, 0.1, 3.0),
                          SolverConfig{}, Tensor3(3, 3, 2));
  CHECK(f.converged);
  CHECK(f.iterations <= 1);
  CHECK(fro_norm(f.b_hat) == 0.0);
}

TEST_CASE("fit trace is monotone and regular") {
  Rng rng(10);
  const Tensor3 b0 =
      tprod(oracle::random_tensor(5, 2, 3, rng), oracle::random_tensor(2, 5, 3, rng));
  const Dataset data = oracle::random_dataset(300, 5, 5, 3, b0, rng, false);
  const LossSpec loss = squared_loss();
  const FitResult f = fit(data, loss, make_penalty(PenaltyKind::MCP, 0.2, 3.0), SolverConfig{},
                          default_init(data, loss));
  REQUIRE(f.trace.size() >= 2);
  CHECK(f.trace[0].iter == 0);
  for (std::size_t i = 1; i < f.trace.size(); ++i) {
    CHECK(f.trace[i].objective <= f.trace[i - 1].objective);
  }
  CHECK(f.converged);
  CHECK(f.trace.back().increment <= SolverConfig{}.eps_tol);
  CHECK(tubal_rank(f.b_hat) == 2);
}

TEST_CASE("default init") {
  Rng rng(11);
  const Tensor3 b0 = oracle::random_tensor(2, 2, 2, rng);
  const Dataset data = oracle::random_dataset(40, 2, 2, 2, b0, rng, false);
  const Tensor3 b = default_init(data, squared_loss());
  CHECK((b.vec() - oracle::ols(data)).norm() < 1e-10);
  const Dataset cls = oracle::random_dataset(40, 2, 2, 2, b0, rng, true);
  CHECK(fro_norm(default_init(cls, logistic_loss())) == 0.0);
  // n < p: the ridge fallback still returns something finite.
  const Dataset wide = oracle::random_dataset(5, 2, 2, 2, b0, rng, false);
  CHECK(std::isfinite(fro_norm(default_init(wide, squared_loss()))));
}
