#include "tubalreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "tubalreg/error.hpp"
#include "tubalreg/tsvd.hpp"

namespace tubalreg {

void SolverConfig::validate() const {
  auto bad = [](const std::string& what) { fail(Errc::BadParameter, "solver." + what); };
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) bad("eta0 must be > 0");
  if (!(kappa > 1.0) || !std::isfinite(kappa)) bad("kappa must be > 1");
  if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha must lie in (0, 1)");
  if (!(eps_tol > 0.0)) bad("eps_tol must be > 0");
  if (max_iter < 1) bad("max_iter must be >= 1");
  if (max_backtrack < 1) bad("max_backtrack must be >= 1");
  if (!(eta_min > 0.0) || !(eta_max > eta_min) || !std::isfinite(eta_max)) {
    bad("eta_min/eta_max must satisfy 0 < eta_min < eta_max < inf");
  }
}

Eigen::MatrixXd weights_from_singulars(const Eigen::MatrixXd& sigma, const PenaltySpec& p) {
  require((sigma.array() >= 0.0).all(), Errc::NegativeSingularValue,
          "singular values must be nonnegative");
  Eigen::MatrixXd w(sigma.rows(), sigma.cols());
  for (Index j = 0; j < sigma.cols(); ++j) {
    for (Index i = 0; i < sigma.rows(); ++i) {
      if (i > 0) {
        require(sigma(i, j) <= sigma(i - 1, j) * (1.0 + 1e-12) + 1e-300, Errc::DomainError,
                "singular value columns must be nonincreasing");
      }
      w(i, j) = dvalue(p, sigma(i, j));
    }
  }
  return w;
}

ProxResult weighted_tsvt_with_sigma(const Tensor3& g, const Eigen::MatrixXd& weights,
                                    double inv_eta) {
  const Index k = std::min(g.d1(), g.d2());
  const Index d3 = g.d3();
  require(weights.rows() == k && weights.cols() == d3, Errc::DimMismatch,
          "weights must be min(d1,d2) x d3");
  require(inv_eta > 0.0 && std::isfinite(inv_eta), Errc::DomainError,
          "threshold scale 1/eta must be positive");
  require((weights.array() >= 0.0).all(), Errc::NegativeWeight, "weights must be nonnegative");
  for (Index j = 0; j < d3; ++j) {
    for (Index i = 1; i < k; ++i) {
      require(weights(i, j) >= weights(i - 1, j) - 1e-12, Errc::WeightOrderViolation,
              "weight column " + std::to_string(j) + " decreases at row " + std::to_string(i));
    }
  }

  SpectralFactors f = spectral_factors(g);
  Eigen::MatrixXd shrunk = (f.sigma - inv_eta * weights).cwiseMax(0.0);
  for (Index j = d3 / 2 + 1; j < d3; ++j) shrunk.col(j) = shrunk.col(d3 - j);
  if ((weights.array() == 0.0).all()) return {g, std::move(shrunk)};
  Tensor3 b = compose(f, shrunk);
  return {std::move(b), std::move(shrunk)};
}

Tensor3 weighted_tsvt(const Tensor3& g, const Eigen::MatrixXd& weights, double inv_eta) {
  return weighted_tsvt_with_sigma(g, weights, inv_eta).b;
}

double bb_init(const Tensor3& b_k, const Tensor3& b_prev, const Tensor3& g_k,
               const Tensor3& g_prev, const SolverConfig& cfg,
               std::optional<double> previous_eta) {
  const double fallback = previous_eta.value_or(cfg.eta0);
  const Eigen::VectorXd d1 = b_k.vec() - b_prev.vec();
  const Eigen::VectorXd d2 = g_k.vec() - g_prev.vec();
  const double den = d1.squaredNorm();
  if (den == 0.0) return fallback;
  const double ratio = d1.dot(d2) / den;
  if (!std::isfinite(ratio) || ratio <= 0.0) return fallback;
  return std::clamp(ratio, cfg.eta_min, cfg.eta_max);
}

double objective(const Tensor3& b, const LossSpec& loss, const Dataset& data,
                 const PenaltySpec& p) {
  return risk(loss, b, data) + spectral_penalty(b, p);
}

namespace {

// Everything the iteration needs about an accepted iterate.
struct Iterate {
  Tensor3 b;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd scores;
  Tensor3 grad;
  double f = 0.0;
};

Iterate make_iterate(Tensor3 b, Eigen::MatrixXd sigma, Eigen::VectorXd scores,
                     const LossSpec& loss, const Dataset& data, const PenaltySpec& p) {
  Iterate it{std::move(b), std::move(sigma), std::move(scores), {}, 0.0};
  it.f = risk_from_scores(loss, it.scores, data.y()) + spectral_penalty(it.sigma, p);
  it.grad = Tensor3(it.b.d1(), it.b.d2(), it.b.d3());
  it.grad.vec().noalias() =
      data.design().transpose() * score_derivative(loss, it.scores, data.y());
  return it;
}

struct Candidate {
  StepResult result;
  Eigen::VectorXd scores;
};

Candidate backtrack(const Iterate& cur, const Eigen::MatrixXd& weights, double eta_init,
                    const LossSpec& loss, const Dataset& data, const PenaltySpec& p,
                    const SolverConfig& cfg) {
  // Absorbs rounding in F once the iterates have settled.
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.f));
  Candidate best;
  double best_merit = std::numeric_limits<double>::infinity();
  double eta = eta_init;
  for (int attempt = 0; attempt <= cfg.max_backtrack; ++attempt) {
    Tensor3 g = cur.b - cur.grad * (1.0 / eta);
    ProxResult prox = weighted_tsvt_with_sigma(g, weights, 1.0 / eta);
    Eigen::VectorXd scores = data.design() * prox.b.vec();
    const double f = risk_from_scores(loss, scores, data.y()) + spectral_penalty(prox.sigma, p);
    const double dist2 = (prox.b.vec() - cur.b.vec()).squaredNorm();
    const double merit = f + 0.5 * cfg.alpha * eta * dist2;
    const bool ok = std::isfinite(f) && merit <= cur.f + slack;
    if (ok || merit < best_merit) {
      best_merit = merit;
      best.result = StepResult{std::move(prox.b), std::move(prox.sigma), eta, attempt, f, ok};
      best.scores = std::move(scores);
      if (ok) return best;
    }
    eta *= cfg.kappa;
  }
  best.result.backtracks = cfg.max_backtrack;
  return best;
}

}  // namespace

StepResult step(const Tensor3& b_k, const Eigen::MatrixXd& sigma_k, double eta_init,
                const LossSpec& loss, const Dataset& data, const PenaltySpec& p,
                const SolverConfig& cfg) {
  cfg.validate();
  check_compatible(loss, b_k, data);
  require(eta_init > 0.0 && std::isfinite(eta_init), Errc::DomainError, "eta_init must be > 0");
  Eigen::VectorXd scores = data.design() * b_k.vec();
  const Iterate cur = make_iterate(b_k, sigma_k, std::move(scores), loss, data, p);
  const Eigen::MatrixXd weights = weights_from_singulars(sigma_k, p);
  return backtrack(cur, weights, eta_init, loss, data, p, cfg).result;
}

FitResult fit(const Dataset& data, const LossSpec& loss, const PenaltySpec& p,
              const SolverConfig& cfg, const Tensor3& b_init) {
  cfg.validate();
  check_compatible(loss, b_init, data);

  FitResult out;
  Eigen::VectorXd scores0 = data.design() * b_init.vec();
  Iterate cur =
      make_iterate(b_init, singular_values(b_init), std::move(scores0), loss, data, p);
  out.trace.push_back({0, cur.f, cfg.eta0, 0.0, 0});

  Tensor3 b_prev;
  Tensor3 g_prev;
  std::optional<double> last_eta;
  for (int k = 0; k < cfg.max_iter; ++k) {
    double eta = cfg.eta0;
    if (last_eta) eta = bb_init(cur.b, b_prev, cur.grad, g_prev, cfg, last_eta);

    Candidate cand;
    try {
      const Eigen::MatrixXd weights = weights_from_singulars(cur.sigma, p);
      cand = backtrack(cur, weights, eta, loss, data, p, cfg);
    } catch (const Error& e) {
      if (e.code() != Errc::SvdFailure && e.code() != Errc::NonFinite) throw;
      out.stalled = true;
      break;
    }
    if (!cand.result.accepted) {
      out.stalled = true;
      break;
    }

    const double increment = fro_norm(cand.result.b_next - cur.b);
    b_prev = std::move(cur.b);
    g_prev = std::move(cur.grad);
    last_eta = cand.result.eta;
    cur = make_iterate(std::move(cand.result.b_next), std::move(cand.result.sigma_next),
                       std::move(cand.scores), loss, data, p);
    ++out.iterations;
    out.trace.push_back({out.iterations, cur.f, cand.result.eta, increment,
                         cand.result.backtracks});
    if (increment <= cfg.eps_tol) {
      out.converged = true;
      break;
    }
  }
  out.b_hat = std::move(cur.b);
  return out;
}

Tensor3 default_init(const Dataset& data, const LossSpec& loss) {
  Tensor3 b(data.d1(), data.d2(), data.d3());
  if (is_classification(loss.kind)) return b;

  const Index p = data.p();
  const double inv_n = 1.0 / static_cast<double>(data.n());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(data.design().transpose(), inv_n);
  const Eigen::VectorXd rhs = data.design().transpose() * data.y() * inv_n;

  Eigen::LLT<Eigen::MatrixXd> llt;
  if (data.n() >= p) {
    llt.compute(gram);
  }
  if (data.n() < p || llt.info() != Eigen::Success) {
    gram.diagonal().array() += 1e-6;
    llt.compute(gram);
  }
  b.vec() = llt.solve(rhs);
  return b;
}

}  // namespace tubalreg
