#include "tubalreg/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <tuple>

#include "tubalreg/error.hpp"
#include "tubalreg/rng.hpp"
#include "tubalreg/tsvd.hpp"

namespace tubalreg {

namespace {

// Runs body(0..count-1) on up to `jobs` threads. The first exception wins.
template <typename Body>
void parallel_for(std::size_t count, int jobs, Body body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace

void EstimatorSpec::validate(Index n) const {
  require(!lambda_grid.empty(), Errc::EmptyGrid, "lambda_grid is empty");
  for (double l : lambda_grid) {
    require(l > 0.0 && std::isfinite(l), Errc::BadParameter, "lambda_grid entries must be > 0");
  }
  for (double r : robust_grid) {
    require(r > 0.0 && std::isfinite(r), Errc::BadParameter,
            "robust_grid entries must be > 0");
  }
  require(robust_grid.empty() || has_robustification(loss.kind), Errc::BadParameter,
          "robust_grid given for a loss without a robustification parameter");
  require(folds >= 2, Errc::FoldTooSmall, "folds must be >= 2");
  require(folds <= n, Errc::FoldTooSmall,
          "folds = " + std::to_string(folds) + " exceeds n = " + std::to_string(n));
  require(jobs >= 1, Errc::BadParameter, "jobs must be >= 1");
  // Surface penalty parameter errors before any fitting starts.
  make_penalty(penalty, lambda_grid.front(), gamma);
  solver.validate();
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  require(folds >= 2 && folds <= n, Errc::FoldTooSmall, "need 2 <= folds <= n");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng rng(derive_seed(seed, "folds"));
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<int>(pos % folds);
  return fold;
}

CvResult cross_validate(const Dataset& data, const EstimatorSpec& spec) {
  spec.validate(data.n());
  const bool robust = has_robustification(spec.loss.kind);
  std::vector<double> robust_values = spec.robust_grid;
  if (robust_values.empty()) robust_values.push_back(spec.loss.param);
  std::sort(robust_values.begin(), robust_values.end());
  robust_values.erase(std::unique(robust_values.begin(), robust_values.end()), robust_values.end());
  std::vector<double> lambdas = spec.lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  const std::vector<int> fold = fold_assignment(data.n(), spec.folds, spec.seed);
  std::vector<Dataset> train(static_cast<std::size_t>(spec.folds));
  std::vector<Dataset> valid(static_cast<std::size_t>(spec.folds));
  std::vector<Tensor3> init(static_cast<std::size_t>(spec.folds));
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<Index> tr;
    std::vector<Index> va;
    for (Index i = 0; i < data.n(); ++i) (fold[i] == f ? va : tr).push_back(i);
    train[f] = data.subset(tr);
    valid[f] = data.subset(va);
  }
  parallel_for(init.size(), spec.jobs,
               [&](std::size_t f) { init[f] = default_init(train[f], spec.loss); });

  const std::size_t nr = robust_values.size();
  const std::size_t nl = lambdas.size();
  const std::size_t nf = static_cast<std::size_t>(spec.folds);
  std::vector<double> crit(nr * nl * nf, 0.0);
  parallel_for(crit.size(), spec.jobs, [&](std::size_t t) {
    const std::size_t f = t % nf;
    const std::size_t l = (t / nf) % nl;
    const std::size_t r = t / (nf * nl);
    const LossSpec loss = robust ? with_param(spec.loss, robust_values[r]) : spec.loss;
    const PenaltySpec pen = make_penalty(spec.penalty, lambdas[l], spec.gamma);
    const FitResult res = fit(train[f], loss, pen, spec.solver, init[f]);
    const double c = risk(spec.loss, res.b_hat, valid[f]);
    crit[t] = std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  });

  CvResult out;
  std::size_t best_r = 0;
  std::size_t best_l = nl - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> means(nr * nl, 0.0);
  for (std::size_t r = 0; r < nr; ++r) {
    // Larger lambda first, so only a strict improvement moves to a smaller one.
    for (std::size_t li = nl; li-- > 0;) {
      double sum = 0.0;
      for (std::size_t f = 0; f < nf; ++f) sum += crit[(r * nl + li) * nf + f];
      const double mean = sum / static_cast<double>(nf);
      means[r * nl + li] = mean;
      const bool better = mean < best || (mean == best && lambdas[li] > lambdas[best_l]);
      if (better) {
        best = mean;
        best_r = r;
        best_l = li;
      }
    }
  }
  out.lambda = lambdas[best_l];
  if (robust) out.robustification = robust_values[best_r];
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t f = 0; f < nf; ++f) {
        out.table.push_back(CvRow{lambdas[l], robust ? robust_values[r] : 0.0,
                                  static_cast<int>(f), crit[(r * nl + l) * nf + f],
                                  means[r * nl + l], r == best_r && l == best_l});
      }
    }
  }
  return out;
}

EstimatorFit fit_estimator(const Dataset& data, const EstimatorSpec& spec) {
  EstimatorFit out;
  out.cv = cross_validate(data, spec);
  out.loss = out.cv.robustification ? with_param(spec.loss, *out.cv.robustification) : spec.loss;
  out.penalty = make_penalty(spec.penalty, out.cv.lambda, spec.gamma);
  out.fit = fit(data, out.loss, out.penalty, spec.solver, default_init(data, out.loss));
  return out;
}

EvalReport evaluate(const Tensor3& b_hat, const Tensor3& b0, const Dataset& test,
                    const LossSpec& loss, double rank_tol) {
  require(b_hat.same_shape(b0), Errc::DimMismatch, "b_hat and b0 differ in shape");
  check_compatible(loss, b_hat, test);
  EvalReport rep;
  const Tensor3 diff = b_hat - b0;
  rep.err = fro_norm(diff);
  rep.log_err = rep.err > 0.0 ? std::log(rep.err) : -std::numeric_limits<double>::infinity();
  rep.nuc_err = rep.err > 0.0 ? ttnn(diff) : 0.0;
  rep.r_hat = tubal_rank(b_hat, rank_tol);
  rep.pe = prediction_error(loss, b_hat, b0, test);
  if (is_classification(loss.kind)) {
    const Eigen::VectorXd s = test.design() * b_hat.vec();
    Index correct = 0;
    for (Index i = 0; i < test.n(); ++i) {
      const double label = sigmoid(s(i)) >= 0.5 ? 1.0 : 0.0;
      if (label == test.y()(i)) ++correct;
    }
    rep.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(test.n());
  }
  return rep;
}

double lambda_anchor(const Dataset& data, const LossSpec& loss, const Tensor3& init,
                     std::uint64_t seed, int draws, double level) {
  check_compatible(loss, init, data);
  require(draws >= 1, Errc::BadParameter, "anchor draws must be >= 1");
  require(level > 0.0 && level <= 1.0, Errc::BadParameter, "anchor level must lie in (0, 1]");
  const Eigen::VectorXd scores = data.design() * init.vec();
  Eigen::VectorXd w = score_derivative(loss, scores, data.y());
  // Least-squares residuals are shrunk by the fit; undo that on average.
  if (!is_classification(loss.kind) && data.n() > data.p()) {
    w *= std::sqrt(static_cast<double>(data.n()) / static_cast<double>(data.n() - data.p()));
  }
  CounterRng rng(derive_seed(seed, "anchor"));
  std::vector<double> norms;
  Tensor3 g(data.d1(), data.d2(), data.d3());
  for (int b = 0; b < draws; ++b) {
    std::shuffle(w.begin(), w.end(), rng);
    g.vec().noalias() = data.design().transpose() * w;
    norms.push_back(singular_values(g).maxCoeff());
  }
  std::sort(norms.begin(), norms.end());
  const auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(draws))) - 1;
  return norms[std::min(idx, norms.size() - 1)];
}

std::vector<double> lambda_grid_for(PenaltyKind kind, double gamma, double anchor,
                                    std::span<const double> multipliers) {
  require(anchor > 0.0 && std::isfinite(anchor), Errc::DomainError, "anchor must be > 0");
  require(!multipliers.empty(), Errc::EmptyGrid, "no lambda multipliers");
  // Every kind's C is proportional to lambda.
  const double c_unit = constants(make_penalty(kind, 1.0, gamma)).c_rho_prime;
  std::vector<double> grid;
  for (double m : multipliers) {
    require(m > 0.0, Errc::BadParameter, "lambda multipliers must be > 0");
    grid.push_back(anchor * m / c_unit);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

double robust_scale(const Dataset& data, const Tensor3& b) {
  require(data.conforms(b), Errc::DimMismatch, "coefficient does not match dataset");
  const Eigen::VectorXd r = data.y() - data.design() * b.vec();
  std::vector<double> v(r.data(), r.data() + r.size());
  auto median = [](std::vector<double>& x) {
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + mid, x.end());
    double m = x[mid];
    if (x.size() % 2 == 0) m = 0.5 * (m + *std::max_element(x.begin(), x.begin() + mid));
    return m;
  };
  const double med = median(v);
  for (double& x : v) x = std::abs(x - med);
  return 1.4826 * median(v);
}

double reference_robustification(LossKind kind, const Dataset& data) {
  if (!has_robustification(kind)) return 0.0;
  const double n = static_cast<double>(data.n()), p = static_cast<double>(data.p());
  // Least-squares residuals shrink by sqrt((n - p) / n); undo that, and fall
  // back to the raw responses once the fit interpolates.
  const double scale = data.n() > data.p()
                           ? robust_scale(data, default_init(data, squared_loss())) * std::sqrt(n / (n - p))
                           : robust_scale(data, Tensor3(data.d1(), data.d2(), data.d3()));
  // A zero scale (exact fit on more than half the samples) would make the
  // loss degenerate.
  const double s = scale > 0.0 ? scale : 1.0;
  if (kind == LossKind::Huber) {
    return adaptive_huber_upsilon(data.n(), std::max(data.d1(), data.d2()), data.d3(), 1.0, s);
  }
  return 2.9846 * s;
}

double default_anchor(const Dataset& data, const LossSpec& loss, std::uint64_t seed,
                      const GridOptions& grid) {
  // An interpolating init leaves no residual to calibrate against.
  const Tensor3 init = data.n() > data.p() ? default_init(data, loss)
                                           : Tensor3(data.d1(), data.d2(), data.d3());
  return lambda_anchor(data, loss, init, seed, grid.anchor_draws, grid.anchor_level);
}

EstimatorSpec default_estimator(const Dataset& data, LossKind loss, PenaltyKind penalty,
                                std::uint64_t seed, const SolverConfig& solver,
                                const GridOptions& grid) {
  EstimatorSpec spec;
  spec.penalty = penalty;
  spec.gamma = default_gamma(penalty);
  spec.solver = solver;
  spec.seed = seed;
  spec.loss = LossSpec{loss, 0.0};
  if (has_robustification(loss)) {
    const double ref = reference_robustification(loss, data);
    spec.loss.param = ref;
    const auto& mult = loss == LossKind::Huber ? grid.huber_multipliers : grid.closs_multipliers;
    for (double m : mult) spec.robust_grid.push_back(ref * m);
  }
  const double anchor = default_anchor(data, spec.loss, seed, grid);
  spec.lambda_grid = lambda_grid_for(penalty, spec.gamma, anchor, grid.lambda_multipliers);
  return spec;
}

}  // namespace tubalreg
