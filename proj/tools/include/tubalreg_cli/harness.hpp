#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tubalreg/datagen.hpp"
#include "tubalreg/model.hpp"
#include "tubalreg_cli/config.hpp"

namespace tubalreg::cli {

struct BenchCell {
  SimSpec sim;  // sim.seed is ignored; replications derive their own
  LossKind loss = LossKind::Squared;
  PenaltyKind penalty = PenaltyKind::MCP;

  /// Stable identifier used in the progress file.
  std::string key() const;
};

std::vector<BenchCell> expand_cells(const BenchConfig& cfg);

/// Data seed of replication `rep`. It does not depend on the cell, so cells
/// that share a simulation design see identical data.
std::uint64_t replication_seed(std::uint64_t base_seed, int rep);

struct RepOutcome {
  std::string cell;
  int rep = 0;
  std::string status = "ok";  // "ok" or "error:<Code>"
  EvalReport report;
  double lambda = 0.0;
  double robustification = 0.0;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;  // wall time, excluded from aggregated output
};

struct RepOptions {
  SolverConfig solver;
  GridOptions grid;
  std::optional<Index> test_size;
  double rank_tol = 1e-8;
  int jobs = 1;
};

/// Simulates, cross-validates, refits and evaluates one replication.
/// Numerical failures are captured in `status`, never thrown.
RepOutcome run_replication(const BenchCell& cell, int rep, std::uint64_t base_seed,
                           const RepOptions& opt);

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};
Stat summarize_values(std::span<const double> v);

struct CellSummary {
  BenchCell cell;
  int reps = 0;  // successful replications
  int failed = 0;
  Stat err, log_err, nuc_err, r_hat, pe, accuracy;
  std::string status;  // "ok", "partial", "failed"
};

CellSummary summarize_cell(const BenchCell& cell, std::span<const RepOutcome> outcomes);

std::string results_csv(std::span<const CellSummary> cells);

json outcome_to_json(const RepOutcome& o);
RepOutcome outcome_from_json(const json& j);

/// Runs every missing (cell, replication) pair, appending each outcome to
/// out/progress.jsonl as it completes, then writes out/results.csv from the
/// progress records. Rerunning after an interruption resumes.
std::vector<CellSummary> run_bench(const BenchConfig& cfg, std::uint64_t base_seed,
                                   const SolverConfig& solver, int jobs, const fs::path& out);

}  // namespace tubalreg::cli
