#include "tubalreg/loss.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "tubalreg/error.hpp"

namespace tubalreg {

namespace {

// log(1 + e^s) without overflow.
double softplus(double s) noexcept {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_param(const LossSpec& spec) {
  if (has_robustification(spec.kind)) {
    require(std::isfinite(spec.param) && spec.param > 0.0, Errc::BadParameter,
            std::string(to_string(spec.kind)) + " robustification parameter must be > 0");
  }
}

}  // namespace

LossSpec squared_loss() { return {LossKind::Squared, 0.0}; }
LossSpec logistic_loss() { return {LossKind::LogisticMLE, 0.0}; }
LossSpec md_logistic_loss() { return {LossKind::MDLogistic, 0.0}; }

LossSpec huber_loss(double upsilon) {
  LossSpec s{LossKind::Huber, upsilon};
  check_param(s);
  return s;
}

LossSpec closs(double sigma) {
  LossSpec s{LossKind::CLoss, sigma};
  check_param(s);
  return s;
}

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::Squared: return "squared";
    case LossKind::LogisticMLE: return "logistic";
    case LossKind::Huber: return "huber";
    case LossKind::CLoss: return "closs";
    case LossKind::MDLogistic: return "mdlogistic";
  }
  return "unknown";
}

bool is_classification(LossKind kind) noexcept {
  return kind == LossKind::LogisticMLE || kind == LossKind::MDLogistic;
}

bool has_robustification(LossKind kind) noexcept {
  return kind == LossKind::Huber || kind == LossKind::CLoss;
}

LossSpec with_param(const LossSpec& spec, double param) {
  LossSpec out{spec.kind, param};
  check_param(out);
  return out;
}

LossKind loss_kind_from_string(std::string_view text) {
  const std::string name = lower_trim(text);
  if (name == "squared" || name == "lsr" || name == "ls") return LossKind::Squared;
  if (name == "logistic" || name == "lr" || name == "logisticmle") return LossKind::LogisticMLE;
  if (name == "mdlogistic" || name == "rlr") return LossKind::MDLogistic;
  if (name == "huber" || name == "ahr") return LossKind::Huber;
  if (name == "closs" || name == "cir") return LossKind::CLoss;
  fail(Errc::ParseError, "unknown loss '" + name + "'");
}

LossSpec parse_loss(std::string_view text) {
  const std::string t = lower_trim(text);
  const auto open = t.find('(');
  const std::string name = lower_trim(std::string_view(t).substr(0, open));
  double param = std::nan("");
  if (open != std::string::npos) {
    if (t.back() != ')') fail(Errc::ParseError, "unterminated loss spec '" + t + "'");
    const std::string inner = t.substr(open + 1, t.size() - open - 2);
    const auto eq = inner.find('=');
    const std::string key = lower_trim(std::string_view(inner).substr(0, eq == std::string::npos ? 0 : eq));
    const std::string val = lower_trim(eq == std::string::npos ? inner : inner.substr(eq + 1));
    if (!inner.empty()) {
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), param);
      if (ec != std::errc{} || ptr != val.data() + val.size()) {
        fail(Errc::ParseError, "bad loss parameter in '" + t + "'");
      }
      if (!key.empty() && key != "upsilon" && key != "sigma") {
        fail(Errc::ParseError, "unknown loss parameter '" + key + "'");
      }
    }
  }
  if (open == std::string::npos) {
    const LossKind k = loss_kind_from_string(name);
    if (has_robustification(k)) fail(Errc::ParseError, "loss '" + name + "' needs a parameter");
  }
  if (name == "squared" || name == "lsr" || name == "ls") return squared_loss();
  if (name == "logistic" || name == "lr" || name == "logisticmle") return logistic_loss();
  if (name == "mdlogistic" || name == "rlr") return md_logistic_loss();
  if (name == "huber" || name == "ahr" || name == "closs" || name == "cir") {
    if (std::isnan(param)) fail(Errc::ParseError, "loss '" + name + "' needs a parameter");
    return (name == "huber" || name == "ahr") ? huber_loss(param) : closs(param);
  }
  fail(Errc::ParseError, "unknown loss '" + name + "'");
}

std::string format_loss(const LossSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(spec.kind);
  if (spec.kind == LossKind::Huber) os << "(upsilon=" << spec.param << ")";
  if (spec.kind == LossKind::CLoss) os << "(sigma=" << spec.param << ")";
  return os.str();
}

double sigmoid(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void check_compatible(const LossSpec& spec, const Tensor3& b, const Dataset& data) {
  check_param(spec);
  require(data.conforms(b), Errc::DimMismatch, "coefficient tensor does not match the data dims");
  if (is_classification(spec.kind)) {
    require(data.binary_labels(), Errc::NonBinaryLabel,
            std::string(to_string(spec.kind)) + " requires labels in {0, 1}");
  }
}

double risk_from_scores(const LossSpec& spec, const Eigen::VectorXd& scores,
                        const Eigen::VectorXd& y) {
  const Index n = y.size();
  double total = 0.0;
  switch (spec.kind) {
    case LossKind::Squared:
      for (Index i = 0; i < n; ++i) {
        const double r = y(i) - scores(i);
        total += 0.5 * r * r;
      }
      break;
    case LossKind::LogisticMLE:
      for (Index i = 0; i < n; ++i) total += softplus(scores(i)) - y(i) * scores(i);
      break;
    case LossKind::Huber: {
      const double u = spec.param;
      for (Index i = 0; i < n; ++i) {
        const double r = std::abs(y(i) - scores(i));
        total += r <= u ? 0.5 * r * r : u * r - 0.5 * u * u;
      }
      break;
    }
    case LossKind::CLoss: {
      const double s2 = spec.param * spec.param;
      for (Index i = 0; i < n; ++i) {
        const double r = y(i) - scores(i);
        total += -s2 * std::expm1(-r * r / s2);
      }
      break;
    }
    case LossKind::MDLogistic:
      for (Index i = 0; i < n; ++i) {
        const double r = y(i) - sigmoid(scores(i));
        total += r * r;
      }
      break;
  }
  return total / static_cast<double>(n);
}

Eigen::VectorXd score_derivative(const LossSpec& spec, const Eigen::VectorXd& scores,
                                 const Eigen::VectorXd& y) {
  const Index n = y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd w(n);
  switch (spec.kind) {
    case LossKind::Squared:
      for (Index i = 0; i < n; ++i) w(i) = -(y(i) - scores(i)) * inv_n;
      break;
    case LossKind::LogisticMLE:
      for (Index i = 0; i < n; ++i) w(i) = (sigmoid(scores(i)) - y(i)) * inv_n;
      break;
    case LossKind::Huber: {
      const double u = spec.param;
      for (Index i = 0; i < n; ++i) w(i) = -std::clamp(y(i) - scores(i), -u, u) * inv_n;
      break;
    }
    case LossKind::CLoss: {
      const double s2 = spec.param * spec.param;
      for (Index i = 0; i < n; ++i) {
        const double r = y(i) - scores(i);
        w(i) = -2.0 * r * std::exp(-r * r / s2) * inv_n;
      }
      break;
    }
    case LossKind::MDLogistic:
      for (Index i = 0; i < n; ++i) {
        const double p = sigmoid(scores(i));
        w(i) = -2.0 * (y(i) - p) * p * (1.0 - p) * inv_n;
      }
      break;
  }
  return w;
}

double risk(const LossSpec& spec, const Tensor3& b, const Dataset& data) {
  check_compatible(spec, b, data);
  const Eigen::VectorXd scores = data.design() * b.vec();
  return risk_from_scores(spec, scores, data.y());
}

Tensor3 gradient(const LossSpec& spec, const Tensor3& b, const Dataset& data) {
  check_compatible(spec, b, data);
  const Eigen::VectorXd scores = data.design() * b.vec();
  const Eigen::VectorXd w = score_derivative(spec, scores, data.y());
  Tensor3 g(b.d1(), b.d2(), b.d3());
  g.vec().noalias() = data.design().transpose() * w;
  return g;
}

double adaptive_huber_upsilon(Index n, Index d, Index d3, double delta, double c_delta) {
  require(n > 0 && d > 0 && d3 > 0, Errc::DomainError, "n, d, d3 must be positive");
  require(delta > 0.0 && delta <= 1.0, Errc::DomainError, "delta must lie in (0, 1]");
  require(c_delta > 0.0, Errc::DomainError, "c_delta must be positive");
  const double ratio = static_cast<double>(n) / (static_cast<double>(d) * static_cast<double>(d3));
  return c_delta * std::pow(ratio, 1.0 / (1.0 + delta));
}

double prediction_error(const LossSpec& spec, const Tensor3& b_hat, const Tensor3& b0,
                        const Dataset& data) {
  require(b_hat.same_shape(b0), Errc::DimMismatch, "prediction error needs equal shapes");
  const Tensor3 dg = gradient(spec, b_hat, data) - gradient(spec, b0, data);
  return inner(dg, b_hat - b0);
}

double predict(const LossSpec& spec, const Tensor3& b, const Tensor3& x) {
  const double s = inner(x, b);
  if (is_classification(spec.kind)) return sigmoid(s) >= 0.5 ? 1.0 : 0.0;
  return s;
}

}  // namespace tubalreg
