#pragma once

#include <string>
#include <string_view>

namespace tubalreg {

/// Concave singular-value penalties. TTNN is the convex lambda*|x| baseline.
enum class PenaltyKind { TTNN, Geman, SCAD, Laplace, MCP, ETP, Logarithm };

inline constexpr PenaltyKind kAllPenaltyKinds[] = {
    PenaltyKind::TTNN,    PenaltyKind::Geman, PenaltyKind::SCAD,     PenaltyKind::Laplace,
    PenaltyKind::MCP,     PenaltyKind::ETP,   PenaltyKind::Logarithm};

std::string_view to_string(PenaltyKind kind) noexcept;
PenaltyKind penalty_kind_from_string(std::string_view name);

/// Penalty kind with its parameters. Build with `make_penalty`, which
/// enforces lambda > 0 (TTNN also allows 0), gamma > 1, and gamma > 2 for
/// SCAD. TTNN ignores gamma.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::TTNN;
  double lambda = 1.0;
  double gamma = 2.0;
};

PenaltySpec make_penalty(PenaltyKind kind, double lambda, double gamma = 2.0);

/// Conventional shape parameter used when a config names only the kind.
double default_gamma(PenaltyKind kind) noexcept;

/// Parses "mcp(lambda=0.1,gamma=2)"; gamma may be omitted.
PenaltySpec parse_penalty(std::string_view text);
std::string format_penalty(const PenaltySpec& p);

struct PenaltyConstants {
  double c_rho_prime = 0.0;  // lim_{x->0+} rho'(x)
  double mu = 0.0;           // rho(x) + mu/2 x^2 is convex
};

/// rho(|x|).
double value(const PenaltySpec& p, double x);

/// rho'(x) for x >= 0. At 0 returns the right limit C; at SCAD/MCP kinks the
/// left branch. Throws NegativeInput for x < 0.
double dvalue(const PenaltySpec& p, double x);

PenaltyConstants constants(const PenaltySpec& p);

/// Whether rho'(s) <= (rho(x) - rho(s)) / (x - s) <= rho'(x) holds with
/// 1e-12 slack. Requires 0 < x < s.
bool antimonotone_check(const PenaltySpec& p, double x, double s);

}  // namespace tubalreg
