#include "tubalreg/penalty.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "tubalreg/error.hpp"

namespace tubalreg {

std::string_view to_string(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::TTNN: return "ttnn";
    case PenaltyKind::Geman: return "geman";
    case PenaltyKind::SCAD: return "scad";
    case PenaltyKind::Laplace: return "laplace";
    case PenaltyKind::MCP: return "mcp";
    case PenaltyKind::ETP: return "etp";
    case PenaltyKind::Logarithm: return "logarithm";
  }
  return "unknown";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(Errc::ParseError, "bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

PenaltyKind penalty_kind_from_string(std::string_view name) {
  const std::string n = lower(trim(name));
  if (n == "ttnn" || n == "t-tnn" || n == "tnn") return PenaltyKind::TTNN;
  if (n == "geman") return PenaltyKind::Geman;
  if (n == "scad") return PenaltyKind::SCAD;
  if (n == "laplace") return PenaltyKind::Laplace;
  if (n == "mcp") return PenaltyKind::MCP;
  if (n == "etp") return PenaltyKind::ETP;
  if (n == "logarithm" || n == "log") return PenaltyKind::Logarithm;
  fail(Errc::ParseError, "unknown penalty kind '" + std::string(name) + "'");
}

double default_gamma(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::SCAD: return 3.7;
    case PenaltyKind::MCP: return 3.0;
    default: return 2.0;
  }
}

PenaltySpec make_penalty(PenaltyKind kind, double lambda, double gamma) {
  require(std::isfinite(lambda) && std::isfinite(gamma), Errc::BadParameter,
          "penalty parameters must be finite");
  if (kind == PenaltyKind::TTNN) {
    require(lambda >= 0.0, Errc::BadParameter, "ttnn lambda must be >= 0");
    return {kind, lambda, gamma};
  }
  require(lambda > 0.0, Errc::BadParameter,
          std::string(to_string(kind)) + " lambda must be > 0");
  require(gamma > 1.0, Errc::BadParameter, std::string(to_string(kind)) + " gamma must be > 1");
  require(kind != PenaltyKind::SCAD || gamma > 2.0, Errc::BadParameter,
          "scad gamma must be > 2");
  return {kind, lambda, gamma};
}

PenaltySpec parse_penalty(std::string_view text) {
  const std::string_view t = trim(text);
  const auto open = t.find('(');
  if (open == std::string_view::npos) {
    const PenaltyKind kind = penalty_kind_from_string(t);
    fail(Errc::ParseError, "penalty '" + std::string(to_string(kind)) +
                               "' needs parameters, e.g. mcp(lambda=0.1,gamma=2)");
  }
  if (t.back() != ')') fail(Errc::ParseError, "unterminated penalty spec '" + std::string(t) + "'");
  const PenaltyKind kind = penalty_kind_from_string(t.substr(0, open));
  std::string_view args = t.substr(open + 1, t.size() - open - 2);

  double lambda = std::nan("");
  double gamma = default_gamma(kind);
  while (!args.empty()) {
    const auto comma = args.find(',');
    std::string_view item = trim(args.substr(0, comma));
    args = comma == std::string_view::npos ? std::string_view{} : args.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::ParseError, "expected key=value in penalty spec, got '" + std::string(item) + "'");
    }
    const std::string key = lower(trim(item.substr(0, eq)));
    const double v = parse_double(item.substr(eq + 1), key);
    if (key == "lambda") {
      lambda = v;
    } else if (key == "gamma") {
      gamma = v;
    } else {
      fail(Errc::ParseError, "unknown penalty parameter '" + key + "'");
    }
  }
  if (std::isnan(lambda)) fail(Errc::ParseError, "penalty spec is missing lambda");
  return make_penalty(kind, lambda, gamma);
}

std::string format_penalty(const PenaltySpec& p) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(p.kind) << "(lambda=" << p.lambda;
  if (p.kind != PenaltyKind::TTNN) os << ",gamma=" << p.gamma;
  os << ")";
  return os.str();
}

double value(const PenaltySpec& p, double x) {
  const double a = std::abs(x);
  const double lam = p.lambda;
  const double g = p.gamma;
  switch (p.kind) {
    case PenaltyKind::TTNN:
      return lam * a;
    case PenaltyKind::Geman:
      return lam * a / (a + g);
    case PenaltyKind::SCAD:
      if (a <= lam) return lam * a;
      if (a <= g * lam) return (-a * a + 2.0 * g * lam * a - lam * lam) / (2.0 * (g - 1.0));
      return lam * lam * (g + 1.0) / 2.0;
    case PenaltyKind::Laplace:
      return lam * -std::expm1(-a / g);
    case PenaltyKind::MCP:
      if (a <= g * lam) return lam * a - a * a / (2.0 * g);
      return g * lam * lam / 2.0;
    case PenaltyKind::ETP:
      return lam * std::expm1(-g * a) / std::expm1(-g);
    case PenaltyKind::Logarithm:
      return lam * std::log1p(g * a) / std::log1p(g);
  }
  return 0.0;
}

double dvalue(const PenaltySpec& p, double x) {
  require(x >= 0.0, Errc::NegativeInput, "penalty derivative is defined for x >= 0");
  const double lam = p.lambda;
  const double g = p.gamma;
  switch (p.kind) {
    case PenaltyKind::TTNN:
      return lam;
    case PenaltyKind::Geman:
      return lam * g / ((x + g) * (x + g));
    case PenaltyKind::SCAD:
      if (x <= lam) return lam;
      if (x <= g * lam) return (g * lam - x) / (g - 1.0);
      return 0.0;
    case PenaltyKind::Laplace:
      return lam / g * std::exp(-x / g);
    case PenaltyKind::MCP:
      if (x <= g * lam) return lam - x / g;
      return 0.0;
    case PenaltyKind::ETP:
      return lam * g * std::exp(-g * x) / -std::expm1(-g);
    case PenaltyKind::Logarithm:
      return lam * g / ((g * x + 1.0) * std::log1p(g));
  }
  return 0.0;
}

PenaltyConstants constants(const PenaltySpec& p) {
  const double lam = p.lambda;
  const double g = p.gamma;
  // mu is the supremum of -rho'' over x > 0.
  double mu = 0.0;
  switch (p.kind) {
    case PenaltyKind::TTNN: mu = 0.0; break;
    case PenaltyKind::Geman: mu = 2.0 * lam / (g * g); break;
    case PenaltyKind::SCAD: mu = 1.0 / (g - 1.0); break;
    case PenaltyKind::Laplace: mu = lam / (g * g); break;
    case PenaltyKind::MCP: mu = 1.0 / g; break;
    case PenaltyKind::ETP: mu = lam * g * g / -std::expm1(-g); break;
    case PenaltyKind::Logarithm: mu = lam * g * g / std::log1p(g); break;
  }
  return {dvalue(p, 0.0), mu};
}

bool antimonotone_check(const PenaltySpec& p, double x, double s) {
  require(0.0 < x && x < s, Errc::DomainError, "antimonotone check needs 0 < x < s");
  const double slope = (value(p, x) - value(p, s)) / (x - s);
  // 1e-12 plus the rounding error of the difference quotient itself.
  const double roundoff = 4.0 * std::numeric_limits<double>::epsilon() *
                          std::max(std::abs(value(p, x)), std::abs(value(p, s))) / (s - x);
  const double slack = 1e-12 * std::max(1.0, std::abs(slope)) + roundoff;
  return dvalue(p, s) <= slope + slack && slope <= dvalue(p, x) + slack;
}

}  // namespace tubalreg
