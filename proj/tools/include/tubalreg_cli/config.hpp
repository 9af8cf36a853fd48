#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubalreg/datagen.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/model.hpp"
#include "tubalreg/penalty.hpp"
#include "tubalreg/solver.hpp"

namespace tubalreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

SimSpec sim_from_json(const json& j, const SimSpec& base = {});
json sim_to_json(const SimSpec& s);

SolverConfig solver_from_json(const json& j);
json solver_to_json(const SolverConfig& s);

/// One estimator as written in a config. Grids left empty are derived from
/// the data (see default_estimator).
struct EstimatorConfig {
  LossKind loss = LossKind::Squared;
  std::optional<double> loss_param;
  PenaltyKind penalty = PenaltyKind::MCP;
  std::optional<double> gamma;
  std::vector<double> lambda_grid;
  std::vector<double> robust_grid;
  int folds = 5;
};

EstimatorConfig estimator_from_json(const json& j);
json estimator_to_json(const EstimatorConfig& e);

/// Fills in everything the config left open, using `data`.
EstimatorSpec resolve_estimator(const EstimatorConfig& e, const Dataset& data,
                                std::uint64_t seed, const SolverConfig& solver, int jobs);

/// Axes of a benchmark grid. Every combination is one cell.
struct BenchConfig {
  SimSpec base;
  std::vector<Design> designs;
  std::vector<NoiseSpec> noises;
  std::vector<Index> ns;
  std::vector<Index> ranks;
  std::vector<double> misspec;
  std::vector<LossKind> losses;
  std::vector<PenaltyKind> penalties;
  int replications = 10;
  std::optional<Index> test_size;  // defaults to n
  double rank_tol = 1e-8;
};

BenchConfig bench_from_json(const json& j);

struct ExperimentConfig {
  std::optional<SimSpec> sim;
  std::vector<EstimatorConfig> estimators;
  SolverConfig solver;
  std::optional<BenchConfig> bench;
  std::optional<fs::path> data;  // dataset dir or simulate output dir
  std::optional<fs::path> b0;
  std::optional<fs::path> test;
  std::optional<double> lambda;  // fixed lambda for `fit`
  std::optional<Index> test_size;
  double rank_tol = 1e-8;
  fs::path out = "out";
  int jobs = 1;
  std::uint64_t seed = 0;
};

/// Throws Error(BadConfig) naming the offending key. Relative paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(const json& j, const fs::path& base_dir = {});
ExperimentConfig load_config(const fs::path& path);

}  // namespace tubalreg::cli
