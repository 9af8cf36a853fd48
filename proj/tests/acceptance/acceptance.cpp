// Acceptance suite. `acceptance N` runs criterion N (1..11) and prints one
// PASS/FAIL line; the exit status is 0 on PASS.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tubalreg/datagen.hpp"
#include "tubalreg/error.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/model.hpp"
#include "tubalreg/rng.hpp"
#include "tubalreg/solver.hpp"
#include "tubalreg/tsvd.hpp"
#include "tubalreg_cli/harness.hpp"

using namespace tubalreg;
using oracle::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kBaseSeed = 20260101;
constexpr int kReps = 10;

// ---------------------------------------------------------------------------

void criterion1(Outcome& o) {
  Rng rng(101);
  double worst_prod = 0, worst_rec = 0, worst_pars = 0, worst_rt = 0;
  for (int t = 0; t < 100; ++t) {
    const Index d1 = oracle::uint_in(rng, 1, 8), d2 = oracle::uint_in(rng, 1, 8);
    const Index d3 = oracle::uint_in(rng, 1, 8), d4 = oracle::uint_in(rng, 1, 8);
    const Tensor3 a = oracle::random_tensor(d1, d2, d3, rng);
    const Tensor3 b = oracle::random_tensor(d2, d4, d3, rng);
    const double scale = std::max(1.0, oracle::fro(a) * oracle::fro(b));
    worst_prod = std::max(worst_prod, oracle::max_abs_diff(tprod(a, b), oracle::tprod_bcirc(a, b)) / scale);

    const TSvd s = tsvd(a);
    const Tensor3 rec = tprod(tprod(s.u, s.s), ttranspose(s.v));
    worst_rec = std::max(worst_rec, oracle::fro(rec - a) / std::max(1.0, oracle::fro(a)));

    double energy = 0;
    for (const auto& f : dft3(a).slices) energy += f.squaredNorm();
    const double fa2 = oracle::fro(a) * oracle::fro(a);
    worst_pars = std::max(worst_pars, std::abs(energy - d3 * fa2) / std::max(1.0, d3 * fa2));

    worst_rt = std::max(worst_rt, oracle::max_abs_diff(idft3(dft3(a)), a) / std::max(1.0, oracle::fro(a)));
  }
  o.require(worst_prod <= 1e-10, "t-product vs block-circulant");
  o.require(worst_rec <= 1e-10, "t-SVD reconstruction");
  o.require(worst_pars <= 1e-10, "Parseval");
  o.require(worst_rt <= 1e-12, "DFT round trip");
  o.detail << "tprod " << worst_prod << ", tsvd " << worst_rec << ", parseval " << worst_pars
           << ", roundtrip " << worst_rt;
}

// ---------------------------------------------------------------------------

void criterion2(Outcome& o) {
  Rng rng(202);
  long violations = 0;
  for (PenaltyKind k : kAllPenaltyKinds) {
    for (int t = 0; t < 1000; ++t) {
      const double lam = oracle::unif(rng, 0.05, 3.0);
      const double gam = k == PenaltyKind::SCAD ? oracle::unif(rng, 2.01, 6.0) : oracle::unif(rng, 1.01, 6.0);
      const PenaltySpec p = make_penalty(k, lam, gam);
      const PenaltyConstants c = constants(p);
      const double span = 10 * gam * lam;
      double x = oracle::unif(rng, 1e-6, span), s = oracle::unif(rng, 1e-6, span);
      if (x > s) std::swap(x, s);
      if (s - x < 1e-9) s = x + 1e-3;
      const double tol = 1e-12 * std::max(1.0, lam * span);
      // (i)
      violations += value(p, 0.0) != 0.0;
      violations += value(p, x) != value(p, -x);
      // (ii)
      violations += value(p, x) > value(p, s) + tol;
      // (iii)
      violations += value(p, s) / s > value(p, x) / x + 1e-12;
      // (iv)
      violations += !(c.c_rho_prime > 0 && std::isfinite(c.c_rho_prime));
      violations += dvalue(p, 0.0) != c.c_rho_prime;
      violations += std::abs(dvalue(p, 1e-10 * lam) - c.c_rho_prime) > 1e-6 * c.c_rho_prime;
      // (v): three-point convexity of value + mu/2 x^2.
      const double m = 0.5 * (x + s);
      auto conv = [&](double v) { return value(p, v) + 0.5 * c.mu * v * v; };
      violations += conv(m) > 0.5 * (conv(x) + conv(s)) + 1e-10 * std::max(1.0, conv(s));
      violations += !antimonotone_check(p, x, s);
    }
    // (v) on a dense grid for a few parameter draws.
    for (int t = 0; t < 5; ++t) {
      const double lam = oracle::unif(rng, 0.1, 2.0);
      const double gam = k == PenaltyKind::SCAD ? oracle::unif(rng, 2.1, 5.0) : oracle::unif(rng, 1.1, 5.0);
      const PenaltySpec p = make_penalty(k, lam, gam);
      const double mu = constants(p).mu;
      const int n = 20000;
      const double h = 10 * gam * lam / n;
      double prev = -1e300;
      for (int i = 0; i < n; ++i) {
        const double a = i * h, b = a + h;
        const double slope = (value(p, b) + 0.5 * mu * b * b - value(p, a) - 0.5 * mu * a * a) / h;
        violations += slope < prev - 1e-9;
        prev = slope;
      }
    }
  }
  o.require(violations == 0, "penalty axioms");
  o.detail << violations << " violations over 7 kinds x 1000 draws";
}

// ---------------------------------------------------------------------------

void criterion3(Outcome& o) {
  Rng rng(303);
  double worst = 0;
  int checks = 0;
  for (LossKind k : kAllLossKinds) {
    for (int inst = 0; inst < 20; ++inst) {
      const Index n = oracle::uint_in(rng, 5, 20), d = oracle::uint_in(rng, 3, 6);
      const Index d3 = oracle::uint_in(rng, 1, 4);
      const Tensor3 b0 = oracle::random_tensor(d, d, d3, rng, 0.3);
      const Dataset data = oracle::random_dataset(n, d, d, d3, b0, rng, is_classification(k));
      LossSpec spec{k, 0.0};
      if (k == LossKind::Huber) spec = huber_loss(oracle::unif(rng, 0.3, 2.0));
      if (k == LossKind::CLoss) spec = closs(oracle::unif(rng, 0.5, 3.0));
      const Tensor3 b = oracle::random_tensor(d, d, d3, rng, 0.3);
      const Tensor3 g = gradient(spec, b, data);
      for (int t = 0; t < 10; ++t) {
        Tensor3 e = oracle::random_tensor(d, d, d3, rng);
        e *= 1.0 / fro_norm(e);
        const double h = 1e-6;
        const double fd = (risk(spec, b + h * e, data) - risk(spec, b - h * e, data)) / (2 * h);
        const double an = inner(g, e);
        worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-8));
        ++checks;
      }
    }
  }
  o.require(worst <= 1e-5, "finite differences");
  o.detail << checks << " directional checks, worst relative error " << worst;
}

// ---------------------------------------------------------------------------

void criterion4(Outcome& o) {
  Rng rng(404);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const Index d1 = oracle::uint_in(rng, 1, 8), d2 = oracle::uint_in(rng, 1, 8);
    const Index d3 = oracle::uint_in(rng, 1, 8);
    const Tensor3 g = oracle::random_tensor(d1, d2, d3, rng);
    const Eigen::MatrixXd w = oracle::monotone_weights(std::min(d1, d2), d3, rng, 0.5);
    const double inv_eta = oracle::unif(rng, 0.1, 2.0);
    worst = std::max(worst, oracle::max_abs_diff(weighted_tsvt(g, w, inv_eta), oracle::svt(g, w, inv_eta)));
  }
  o.require(worst <= 1e-10, "prox vs per-slice oracle");

  int beaten = 0;
  for (int t = 0; t < 20; ++t) {
    const Index d = oracle::uint_in(rng, 2, 6), d3 = oracle::uint_in(rng, 1, 5);
    const Tensor3 g = oracle::random_tensor(d, d, d3, rng);
    const Eigen::MatrixXd w = oracle::monotone_weights(d, d3, rng, 0.5);
    const double eta = oracle::unif(rng, 0.5, 3.0);
    const Tensor3 b = weighted_tsvt(g, w, 1.0 / eta);
    auto obj = [&](const Tensor3& x) {
      return wttnn(x, w) / eta + 0.5 * std::pow(fro_norm(x - g), 2);
    };
    const double best = obj(b);
    for (int k = 0; k < 200; ++k) {
      const double eps = k % 2 ? 1e-3 : 1e-2;
      beaten += obj(b + eps * oracle::random_tensor(d, d, d3, rng)) < best - 1e-14;
    }
  }
  o.require(beaten == 0, "prox beaten by a perturbation");
  o.detail << "max deviation " << worst << ", perturbations that improved: " << beaten << "/4000";
}

// ---------------------------------------------------------------------------

void criterion5(Outcome& o) {
  const auto t0 = Clock::now();
  int pairs = 0, nonmono = 0, unconverged = 0, not_fixed = 0;
  int max_iters = 0;
  for (LossKind lk : kAllLossKinds) {
    SimSpec sim;
    sim.n = 200;
    sim.d1 = sim.d2 = 8;
    sim.d3 = 3;
    sim.r = 2;
    sim.design = is_classification(lk) ? Design::Logistic : Design::Linear;
    sim.seed = derive_seed(kBaseSeed, "c5", static_cast<std::uint64_t>(lk));
    const Tensor3 b0 = gen_coef(sim);
    const Dataset data = gen_dataset(sim, b0);
    for (PenaltyKind pk : kAllPenaltyKinds) {
      ++pairs;
      LossSpec loss{lk, 0.0};
      if (has_robustification(lk)) loss.param = reference_robustification(lk, data);
      const double gamma = default_gamma(pk);
      const double anchor = default_anchor(data, loss, sim.seed);
      const double lambda = lambda_grid_for(pk, gamma, anchor, std::vector<double>{1.0}).front();
      const PenaltySpec p = make_penalty(pk, lambda, gamma);
      const SolverConfig cfg;
      const FitResult f = fit(data, loss, p, cfg, default_init(data, loss));
      bool mono = true;
      for (std::size_t i = 1; i < f.trace.size(); ++i) {
        mono = mono && f.trace[i].objective <= f.trace[i - 1].objective;
      }
      nonmono += !mono;
      if (!(f.converged && f.iterations <= 500)) {
        ++unconverged;
        std::cerr << "  no convergence for " << to_string(lk) << "/" << to_string(pk) << ": "
                  << f.iterations << " iterations, last increment "
                  << f.trace.back().increment << "\n";
      }
      max_iters = std::max(max_iters, f.iterations);
      const StepResult again = step(f.b_hat, singular_values(f.b_hat), f.trace.back().eta, loss,
                                    data, p, cfg);
      const double move = fro_norm(again.b_next - f.b_hat);
      if (move > 10 * cfg.eps_tol) {
        ++not_fixed;
        std::cerr << "  fixed-point gap " << move << " for " << to_string(lk) << "/"
                  << to_string(pk) << "\n";
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(nonmono == 0, "monotone descent");
  o.require(unconverged == 0, "convergence within 500 iterations");
  o.require(not_fixed == 0, "fixed-point stationarity");
  o.require(secs < 300, "runtime under 5 min");
  o.detail << pairs << " pairs; nonmonotone " << nonmono << ", unconverged " << unconverged
           << ", not stationary " << not_fixed << ", max iterations " << max_iters << ", "
           << secs << " s";
}

// ---------------------------------------------------------------------------
// Replicated cells through the benchmark harness.

struct CellResult {
  double err = 0, r_hat = 0, acc = 0;
  int failed = 0;
};

cli::BenchCell table_cell(Index n, Index r, Design design, NoiseSpec noise, LossKind loss,
                          PenaltyKind pen, double pm = 0.0) {
  cli::BenchCell c;
  c.sim.n = n;
  c.sim.d1 = c.sim.d2 = 20;
  c.sim.d3 = 3;
  c.sim.r = r;
  c.sim.design = design;
  c.sim.noise = noise;
  c.sim.misspec_pm = pm;
  c.loss = loss;
  c.penalty = pen;
  return c;
}

CellResult run_cell(const cli::BenchCell& cell) {
  const auto t0 = Clock::now();
  std::vector<cli::RepOutcome> outs;
  cli::RepOptions opt;
  for (int rep = 0; rep < kReps; ++rep) outs.push_back(cli::run_replication(cell, rep, kBaseSeed, opt));
  const cli::CellSummary s = cli::summarize_cell(cell, outs);
  CellResult r{s.err.mean, s.r_hat.mean, s.accuracy.count ? s.accuracy.mean : 0.0, s.failed};
  std::cerr << "  " << cell.key() << ": err " << r.err << " (se " << s.err.se << "), r_hat "
            << r.r_hat;
  if (s.accuracy.count) std::cerr << ", acc " << r.acc;
  std::cerr << ", failed " << r.failed << ", " << seconds_since(t0) << " s\n";
  return r;
}

void criterion6(Outcome& o) {
  const auto t0 = Clock::now();
  const auto g = NoiseSpec::gaussian();
  const CellResult mcp = run_cell(table_cell(2000, 2, Design::Linear, g, LossKind::Squared, PenaltyKind::MCP));
  const CellResult tt = run_cell(table_cell(2000, 2, Design::Linear, g, LossKind::Squared, PenaltyKind::TTNN));
  const double secs = seconds_since(t0);
  o.require(mcp.failed == 0 && tt.failed == 0, "no failed replications");
  o.require(mcp.err >= 0.30 && mcp.err <= 0.45, "MCP Err in [0.30, 0.45]");
  o.require(tt.err >= 0.50 && tt.err <= 0.75, "t-TNN Err in [0.50, 0.75]");
  o.require(mcp.r_hat == 2.0, "MCP mean r_hat = 2");
  o.require(tt.r_hat == 2.0, "t-TNN mean r_hat = 2");
  o.require(secs < 1800, "runtime under 30 min");
  o.detail << "MCP Err " << mcp.err << " r_hat " << mcp.r_hat << "; t-TNN Err " << tt.err
           << " r_hat " << tt.r_hat << "; " << secs << " s";
}

void criterion7(Outcome& o) {
  for (const NoiseSpec& noise : {NoiseSpec::student_t(3), NoiseSpec::pareto(3, 2)}) {
    const CellResult lsr = run_cell(table_cell(2000, 2, Design::Linear, noise, LossKind::Squared, PenaltyKind::MCP));
    const CellResult ahr = run_cell(table_cell(2000, 2, Design::Linear, noise, LossKind::Huber, PenaltyKind::MCP));
    const CellResult cir = run_cell(table_cell(2000, 2, Design::Linear, noise, LossKind::CLoss, PenaltyKind::MCP));
    o.require(lsr.failed + ahr.failed + cir.failed == 0, "no failed replications");
    o.require(cir.err < ahr.err, "CIR < AHR under " + format_noise(noise));
    o.require(ahr.err < lsr.err, "AHR < LSR under " + format_noise(noise));
    o.detail << format_noise(noise) << ": CIR " << cir.err << ", AHR " << ahr.err << ", LSR "
             << lsr.err << "; ";
  }
}

void criterion8(Outcome& o) {
  std::vector<double> errs;
  for (Index n : {2000, 4000, 6000}) {
    const CellResult c = run_cell(table_cell(n, 2, Design::Hetero, NoiseSpec::gaussian(), LossKind::Squared, PenaltyKind::MCP));
    o.require(c.failed == 0, "no failed replications");
    errs.push_back(c.err);
  }
  o.require(errs[1] < errs[0] && errs[2] < errs[1], "Err strictly decreasing in n");
  o.require(errs[2] / errs[0] <= 0.65, "Err(6000)/Err(2000) <= 0.65");
  o.detail << "Err " << errs[0] << " -> " << errs[1] << " -> " << errs[2] << ", ratio "
           << errs[2] / errs[0];
}

void criterion9(Outcome& o) {
  std::vector<double> errs;
  for (Index r : {2, 4, 8}) {
    const CellResult c = run_cell(table_cell(2000, r, Design::Hetero, NoiseSpec::gaussian(), LossKind::Squared, PenaltyKind::MCP));
    o.require(c.failed == 0, "no failed replications");
    errs.push_back(c.err);
  }
  o.require(errs[1] > errs[0] && errs[2] > errs[1], "Err strictly increasing in r");
  o.detail << "Err " << errs[0] << " -> " << errs[1] << " -> " << errs[2];
}

void criterion10(Outcome& o) {
  const auto g = NoiseSpec::gaussian();
  const CellResult clean = run_cell(table_cell(2000, 2, Design::Logistic, g, LossKind::MDLogistic, PenaltyKind::MCP));
  const CellResult miss = run_cell(table_cell(2000, 2, Design::Logistic, g, LossKind::MDLogistic, PenaltyKind::MCP, 15.0));
  o.require(clean.failed + miss.failed == 0, "no failed replications");
  o.require(clean.acc >= 80.0, "accuracy >= 80%");
  o.require(clean.r_hat == 2.0, "mean r_hat = 2");
  o.require(clean.acc - miss.acc < 2.0, "accuracy drop from pm=0 to pm=15 under 2 points");
  o.detail << "Acc " << clean.acc << "% (r_hat " << clean.r_hat << "), pm=15 Acc " << miss.acc
           << "%";
}

// ---------------------------------------------------------------------------

void criterion11(Outcome& o) {
  SimSpec sim;
  sim.n = 300;
  sim.d1 = sim.d2 = 8;
  sim.d3 = 3;
  sim.r = 2;
  sim.seed = derive_seed(kBaseSeed, "c11");
  const Tensor3 b0 = gen_coef(sim);
  const Dataset data = gen_dataset(sim, b0);
  const double anchor = default_anchor(data, squared_loss(), sim.seed);
  const PenaltySpec p = make_penalty(PenaltyKind::TTNN, anchor);
  Rng rng(1111);
  SolverConfig cfg;
  const FitResult a = fit(data, squared_loss(), p, cfg, oracle::random_tensor(8, 8, 3, rng, 3.0));
  const FitResult b = fit(data, squared_loss(), p, cfg, oracle::random_tensor(8, 8, 3, rng, 3.0));
  const double fa = a.trace.back().objective, fb = b.trace.back().objective;
  const double rel = std::abs(fa - fb) / std::max(std::abs(fa), std::abs(fb));
  o.require(a.converged && b.converged, "both runs converge");
  o.require(rel <= 1e-6, "final objectives agree to 1e-6");
  o.detail << "F = " << fa << " vs " << fb << ", relative gap " << rel;
}

const std::function<void(Outcome&)> kCriteria[] = {criterion1, criterion2, criterion3, criterion4,
                                                    criterion5, criterion6, criterion7, criterion8,
                                                    criterion9, criterion10, criterion11};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1-11>\n";
    return 2;
  }
  const int id = std::atoi(argv[1]);
  if (id < 1 || id > 11) {
    std::cerr << "unknown criterion " << argv[1] << "\n";
    return 2;
  }
  Outcome o;
  const auto t0 = Clock::now();
  try {
    kCriteria[id - 1](o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what();
  }
  std::printf("criterion %d: %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(),
              seconds_since(t0));
  return o.pass ? 0 : 1;
}
