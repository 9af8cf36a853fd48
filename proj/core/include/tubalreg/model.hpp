#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tubalreg/dataset.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/penalty.hpp"
#include "tubalreg/solver.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg {

struct EstimatorSpec {
  /// Loss being fit. For Huber and C-loss, `loss.param` is also the fixed
  /// reference parameter used to score validation folds.
  LossSpec loss;
  PenaltyKind penalty = PenaltyKind::MCP;
  double gamma = 3.0;
  std::vector<double> lambda_grid;
  /// Candidate upsilon / sigma values. Empty means "use loss.param only".
  std::vector<double> robust_grid;
  SolverConfig solver;
  int folds = 5;
  std::uint64_t seed = 0;
  /// Worker threads for the fold x grid refits. Results do not depend on it.
  int jobs = 1;

  /// EmptyGrid, FoldTooSmall (against n), BadParameter.
  void validate(Index n) const;
};

struct CvRow {
  double lambda = 0.0;
  double robustification = 0.0;  // 0 for losses without one
  int fold = 0;
  double criterion = 0.0;
  double mean_criterion = 0.0;
  bool selected = false;
};

struct CvResult {
  double lambda = 0.0;
  std::optional<double> robustification;
  /// Sorted by (robustification, lambda, fold).
  std::vector<CvRow> table;
};

/// fold[i] in [0, folds): a seeded permutation dealt round-robin.
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

CvResult cross_validate(const Dataset& data, const EstimatorSpec& spec);

struct EstimatorFit {
  CvResult cv;
  LossSpec loss;        // with the selected robustification
  PenaltySpec penalty;  // with the selected lambda
  FitResult fit;
};

/// Cross-validation followed by a refit on all of `data`.
EstimatorFit fit_estimator(const Dataset& data, const EstimatorSpec& spec);

struct EvalReport {
  double err = 0.0;
  double log_err = 0.0;  // -inf when err == 0
  double nuc_err = 0.0;
  int r_hat = 0;
  std::optional<double> accuracy;  // percent, classification losses only
  double pe = 0.0;
};

EvalReport evaluate(const Tensor3& b_hat, const Tensor3& b0, const Dataset& test,
                    const LossSpec& loss, double rank_tol = 1e-8);

/// Empirical `level` quantile, over `draws` random permutations e' of the
/// per-sample loss scores psi(e) at `init`, of the largest Fourier-domain
/// singular value of (1/n) sum_i psi(e'_i) X_i: a simulated size of the
/// loss gradient at the truth.
double lambda_anchor(const Dataset& data, const LossSpec& loss, const Tensor3& init,
                     std::uint64_t seed, int draws = 20, double level = 0.95);

/// lambda values whose maximal shrinkage weight C equals anchor * m for each
/// multiplier m, sorted ascending.
std::vector<double> lambda_grid_for(PenaltyKind kind, double gamma, double anchor,
                                    std::span<const double> multipliers);

/// 1.4826 * median absolute deviation of the residuals y - <X_i, b>.
double robust_scale(const Dataset& data, const Tensor3& b);

/// Data-driven tuning grids shared by the CLI and the benchmark harness.
struct GridOptions {
  /// Multiples of the gradient-size anchor assigned to C (the largest
  /// shrinkage weight). Values below 1 fall outside the admissible region of
  /// the tuning condition.
  std::vector<double> lambda_multipliers = {1.0, 1.25, 1.5, 2.0, 3.0};
  /// Multiples of the reference upsilon (Huber) and sigma (C-loss).
  std::vector<double> huber_multipliers = {0.125, 0.25, 0.5, 1.0, 2.0};
  std::vector<double> closs_multipliers = {0.5, 1.0, 2.0, 4.0};
  int anchor_draws = 20;
  double anchor_level = 0.95;
};

/// Reference robustification, with s the robust residual scale of the
/// least-squares fit: the adaptive upsilon with delta = 1 and c = s (Huber),
/// 2.9846 * s (C-loss), 0 for other losses.
double reference_robustification(LossKind kind, const Dataset& data);

/// lambda_anchor at the default initial value, or at zero when n <= p.
double default_anchor(const Dataset& data, const LossSpec& loss, std::uint64_t seed,
                      const GridOptions& grid = {});

/// An EstimatorSpec with lambda and robustification grids derived from
/// `data`: the reference value from reference_robustification, its grid
/// from the GridOptions multipliers, and lambda from lambda_anchor at
/// the default initial value.
EstimatorSpec default_estimator(const Dataset& data, LossKind loss, PenaltyKind penalty,
                                std::uint64_t seed, const SolverConfig& solver = {},
                                const GridOptions& grid = {});

}  // namespace tubalreg
