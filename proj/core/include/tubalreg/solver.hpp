#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tubalreg/dataset.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/penalty.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg {

/// Settings of the reweighted proximal-gradient solver. `eta` is the inverse
/// step size; 1/eta multiplies the gradient and the shrinkage weights.
struct SolverConfig {
  double eta0 = 1.0;
  double kappa = 2.0;         // backtracking multiplier, > 1
  double alpha = 1e-4;        // sufficient-decrease weight in (0, 1)
  double eps_tol = 1e-6;      // stop once ||B_{k+1} - B_k||_F <= eps_tol
  int max_iter = 500;
  int max_backtrack = 60;
  double eta_min = 1e-8;      // clamps for the Barzilai-Borwein estimate
  double eta_max = 1e12;

  /// Throws BadParameter naming the offending field.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double eta = 0.0;
  double increment = 0.0;
  int backtracks = 0;
};

struct FitResult {
  Tensor3 b_hat;
  /// Row 0 holds the starting point; row k the k-th accepted update.
  std::vector<IterationRecord> trace;
  int iterations = 0;
  bool converged = false;
  /// Backtracking exhausted without meeting the descent criterion.
  bool stalled = false;
};

/// w_ij = rho'(sigma_ij). Columns of `sigma` must be nonincreasing and
/// nonnegative; the result has nondecreasing columns.
Eigen::MatrixXd weights_from_singulars(const Eigen::MatrixXd& sigma, const PenaltySpec& p);

struct ProxResult {
  Tensor3 b;
  Eigen::MatrixXd sigma;  // Fourier-domain singular values of b
};

/// Weighted tensor singular value thresholding: shrinks every Fourier-domain
/// singular value of G to max(sigma_ij - inv_eta * w_ij, 0) and recomposes.
/// This is the exact minimizer of inv_eta * ||B||_{W,*} + 1/2 ||B - G||_F^2
/// when each weight column is nondecreasing.
Tensor3 weighted_tsvt(const Tensor3& g, const Eigen::MatrixXd& weights, double inv_eta);
ProxResult weighted_tsvt_with_sigma(const Tensor3& g, const Eigen::MatrixXd& weights,
                                    double inv_eta);

/// Barzilai-Borwein inverse step <dB, dG> / <dB, dB>, clamped to
/// [eta_min, eta_max]. Degenerate ratios (dB = 0, non-finite or <= 0) fall
/// back to `previous_eta`, or eta0 when there is none.
double bb_init(const Tensor3& b_k, const Tensor3& b_prev, const Tensor3& g_k,
               const Tensor3& g_prev, const SolverConfig& cfg,
               std::optional<double> previous_eta = std::nullopt);

/// F(B) = L_n(B) + rho_lambda(B).
double objective(const Tensor3& b, const LossSpec& loss, const Dataset& data,
                 const PenaltySpec& p);

struct StepResult {
  Tensor3 b_next;
  Eigen::MatrixXd sigma_next;
  double eta = 0.0;         // inverse step of the returned candidate
  int backtracks = 0;
  double objective = 0.0;   // F(b_next)
  bool accepted = false;    // false: backtracking exhausted, best candidate returned
};

/// One outer iteration: weights from `sigma_k`, then backtracking on
/// eta <- kappa * eta until
///   F(B_next) + alpha/2 * eta * ||B_next - B_k||^2 <= F(B_k).
StepResult step(const Tensor3& b_k, const Eigen::MatrixXd& sigma_k, double eta_init,
                const LossSpec& loss, const Dataset& data, const PenaltySpec& p,
                const SolverConfig& cfg);

/// Iterative reweighting with weighted t-SVT updates. Numerical stalls end
/// the run with converged = false instead of throwing.
FitResult fit(const Dataset& data, const LossSpec& loss, const PenaltySpec& p,
              const SolverConfig& cfg, const Tensor3& b_init);

/// Least-squares start for regression losses (ridge 1e-6 when the Gram
/// matrix is singular), zero for classification losses.
Tensor3 default_init(const Dataset& data, const LossSpec& loss);

}  // namespace tubalreg
