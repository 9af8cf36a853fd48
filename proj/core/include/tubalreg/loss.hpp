#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

#include "tubalreg/dataset.hpp"
#include "tubalreg/tensor.hpp"

namespace tubalreg {

/// Empirical risks. Huber carries its cutoff upsilon and CLoss its
/// bandwidth sigma in `LossSpec::param`.
enum class LossKind { Squared, LogisticMLE, Huber, CLoss, MDLogistic };

inline constexpr LossKind kAllLossKinds[] = {LossKind::Squared, LossKind::LogisticMLE,
                                             LossKind::Huber, LossKind::CLoss,
                                             LossKind::MDLogistic};

struct LossSpec {
  LossKind kind = LossKind::Squared;
  double param = 0.0;
};

LossSpec squared_loss();
LossSpec logistic_loss();
LossSpec huber_loss(double upsilon);
LossSpec closs(double sigma);
LossSpec md_logistic_loss();

std::string_view to_string(LossKind kind) noexcept;
/// "squared", "logistic", "huber(upsilon=1.5)", "closs(sigma=2)", "mdlogistic".
LossSpec parse_loss(std::string_view text);
// Name lookup only; accepts the same aliases as parse_loss.
LossKind loss_kind_from_string(std::string_view name);
std::string format_loss(const LossSpec& spec);

bool is_classification(LossKind kind) noexcept;
bool has_robustification(LossKind kind) noexcept;
/// Same kind with a different upsilon/sigma.
LossSpec with_param(const LossSpec& spec, double param);

double sigmoid(double s) noexcept;

/// L_n(B).
double risk(const LossSpec& spec, const Tensor3& b, const Dataset& data);

/// L_n'(B), accumulated in sample order.
Tensor3 gradient(const LossSpec& spec, const Tensor3& b, const Dataset& data);

/// Risk from the linear predictors s_i = <X_i, B>.
double risk_from_scores(const LossSpec& spec, const Eigen::VectorXd& scores,
                        const Eigen::VectorXd& y);

/// Per-sample dL_n/ds_i (already divided by n); L_n'(B) = X^T * result.
Eigen::VectorXd score_derivative(const LossSpec& spec, const Eigen::VectorXd& scores,
                                 const Eigen::VectorXd& y);

/// Throws DimMismatch / NonBinaryLabel when `b` and `data` do not fit `spec`.
void check_compatible(const LossSpec& spec, const Tensor3& b, const Dataset& data);

/// c_delta * (n / (d * d3))^{1 / (1 + delta)}.
double adaptive_huber_upsilon(Index n, Index d, Index d3, double delta, double c_delta);

/// <L_n'(B_hat) - L_n'(B0), B_hat - B0>.
double prediction_error(const LossSpec& spec, const Tensor3& b_hat, const Tensor3& b0,
                        const Dataset& data);

/// <X, B> for regression losses; label 1 if sigmoid(<X, B>) >= 0.5 else 0
/// for classification losses.
double predict(const LossSpec& spec, const Tensor3& b, const Tensor3& x);

}  // namespace tubalreg
