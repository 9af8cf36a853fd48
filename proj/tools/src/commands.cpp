#include "tubalreg_cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tubalreg/error.hpp"
#include "tubalreg/io.hpp"
#include "tubalreg/tsvd.hpp"
#include "tubalreg_cli/harness.hpp"

namespace tubalreg::cli {

namespace {

using io::format_double;

struct DataPaths {
  fs::path train;
  std::optional<fs::path> b0;
  std::optional<fs::path> test;
};

bool is_dataset_dir(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) return false;
  try {
    return json::parse(io::read_text(dir / "manifest.json")).value("format", "") ==
           "tubalreg-dataset";
  } catch (const json::exception&) {
    return false;
  }
}

DataPaths resolve_data(const ExperimentConfig& cfg) {
  if (!cfg.data) fail(Errc::BadConfig, "data: required (a dataset or simulate output directory)");
  if (!fs::exists(*cfg.data)) fail(Errc::IoError, "data directory not found: " + cfg.data->string());
  DataPaths p;
  if (is_dataset_dir(*cfg.data)) {
    p.train = *cfg.data;
  } else if (is_dataset_dir(*cfg.data / "train")) {
    p.train = *cfg.data / "train";
    if (fs::exists(*cfg.data / "B0.tb3")) p.b0 = *cfg.data / "B0.tb3";
    if (is_dataset_dir(*cfg.data / "test")) p.test = *cfg.data / "test";
  } else {
    fail(Errc::IoError, "no dataset found in " + cfg.data->string());
  }
  if (cfg.b0) p.b0 = *cfg.b0;
  if (cfg.test) p.test = *cfg.test;
  return p;
}

std::string na(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

struct Outputs {
  LossSpec loss;
  PenaltySpec penalty;
  FitResult fit;
};

void write_fit_outputs(const fs::path& dir, const Outputs& o, const DataPaths& paths,
                       const Dataset& train, double rank_tol) {
  io::write_tb3(dir / "B_hat.tb3", o.fit.b_hat);
  io::write_pgm(dir / "B_hat.pgm", o.fit.b_hat);
  io::write_trace_csv(dir / "trace.csv", o.fit.trace);

  std::optional<EvalReport> rep;
  if (paths.b0) {
    const Tensor3 b0 = io::read_tb3(*paths.b0);
    const Dataset eval_data = paths.test ? io::load_dataset(*paths.test) : train;
    rep = evaluate(o.fit.b_hat, b0, eval_data, o.loss, rank_tol);
  }
  const double objective = o.fit.trace.empty() ? std::nan("") : o.fit.trace.back().objective;
  std::string s =
      "loss,penalty,lambda,gamma,robustification,iterations,converged,stalled,objective,r_hat,"
      "err,log_err,nuc_err,pe,accuracy\n";
  s += std::string(to_string(o.loss.kind)) + "," + std::string(to_string(o.penalty.kind)) + "," +
       format_double(o.penalty.lambda) + "," + format_double(o.penalty.gamma) + "," +
       format_double(o.loss.param) + "," + std::to_string(o.fit.iterations) + "," +
       (o.fit.converged ? "1" : "0") + "," + (o.fit.stalled ? "1" : "0") + "," + na(objective) +
       "," + std::to_string(rep ? rep->r_hat : tubal_rank(o.fit.b_hat, rank_tol)) + ",";
  if (rep) {
    s += na(rep->err) + "," + (rep->err > 0.0 ? na(rep->log_err) : std::string("-inf")) + "," +
         na(rep->nuc_err) + "," + na(rep->pe) + "," +
         (rep->accuracy ? format_double(*rep->accuracy) : std::string("NA")) + "\n";
  } else {
    s += "NA,NA,NA,NA,NA\n";
  }
  io::write_text(dir / "report.csv", s);
}

fs::path estimator_dir(const ExperimentConfig& cfg, std::size_t i) {
  if (cfg.estimators.size() <= 1) return cfg.out;
  const EstimatorConfig& e = cfg.estimators[i];
  return cfg.out / ("est" + std::to_string(i) + "_" + std::string(to_string(e.loss)) + "_" +
                    std::string(to_string(e.penalty)));
}

std::vector<EstimatorConfig> estimators_or_default(const ExperimentConfig& cfg) {
  return cfg.estimators.empty() ? std::vector<EstimatorConfig>{EstimatorConfig{}} : cfg.estimators;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tubalreg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("TUBALREG_LOG")) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; treat them as the default instead.
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::warn;
  }
  spdlog::set_level(level);
}

}  // namespace

ExitCode exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::BadConfig:
    case Errc::BadParameter:
    case Errc::RankTooLarge:
    case Errc::EmptyGrid:
    case Errc::FoldTooSmall:
    case Errc::TooSmall:
    case Errc::DimMismatch:
    case Errc::NonBinaryLabel:
      return kConfigError;
    case Errc::IoError:
    case Errc::ParseError:
      return kIoError;
    default:
      return kNumericalFailure;
  }
}

void cmd_simulate(const ExperimentConfig& cfg) {
  if (!cfg.sim) fail(Errc::BadConfig, "sim: required for simulate");
  const SimSpec& sim = *cfg.sim;
  const Index test_size = cfg.test_size.value_or(sim.n);
  const Tensor3 b0 = gen_coef(sim);
  Contamination record;
  const Dataset train = gen_dataset(sim, b0, &record);
  const Dataset test = gen_test_dataset(sim, b0, test_size);

  io::save_dataset(cfg.out / "train", train);
  io::save_dataset(cfg.out / "test", test);
  io::write_tb3(cfg.out / "B0.tb3", b0);
  io::write_pgm(cfg.out / "B0.pgm", b0);
  json manifest = {{"format", "tubalreg-simulation"},
                   {"version", 1},
                   {"sim", sim_to_json(sim)},
                   {"seed", sim.seed},
                   {"test_size", test_size},
                   {"tubal_rank", tubal_rank(b0)},
                   {"flipped", record.flipped.size()},
                   {"corrupted", record.corrupted.size()},
                   {"files", {{"train", "train"}, {"test", "test"}, {"b0", "B0.tb3"}}}};
  io::write_text(cfg.out / "manifest.json", manifest.dump(2) + "\n");
  spdlog::info("simulate: wrote {} (n={}, test={})", cfg.out.string(), sim.n, test_size);
}

void cmd_fit(const ExperimentConfig& cfg) {
  const DataPaths paths = resolve_data(cfg);
  const Dataset train = io::load_dataset(paths.train);
  const auto ests = estimators_or_default(cfg);
  for (std::size_t i = 0; i < ests.size(); ++i) {
    const EstimatorConfig& e = ests[i];
    std::optional<double> lambda = cfg.lambda;
    if (!lambda && e.lambda_grid.size() == 1) lambda = e.lambda_grid.front();
    if (!lambda) fail(Errc::BadConfig, "lambda: fit needs a single lambda (use cv for a grid)");
    Outputs o;
    o.loss = LossSpec{e.loss, 0.0};
    if (has_robustification(e.loss)) {
      o.loss.param = e.loss_param.value_or(reference_robustification(e.loss, train));
    }
    o.penalty = make_penalty(e.penalty, *lambda, e.gamma.value_or(default_gamma(e.penalty)));
    o.fit = fit(train, o.loss, o.penalty, cfg.solver, default_init(train, o.loss));
    write_fit_outputs(estimator_dir(cfg, i), o, paths, train, cfg.rank_tol);
    spdlog::info("fit: {} iterations, converged={}", o.fit.iterations, o.fit.converged);
  }
}

void cmd_cv(const ExperimentConfig& cfg) {
  const DataPaths paths = resolve_data(cfg);
  const Dataset train = io::load_dataset(paths.train);
  const auto ests = estimators_or_default(cfg);
  for (std::size_t i = 0; i < ests.size(); ++i) {
    const EstimatorSpec spec = resolve_estimator(ests[i], train, cfg.seed, cfg.solver, cfg.jobs);
    const EstimatorFit ef = fit_estimator(train, spec);
    const fs::path dir = estimator_dir(cfg, i);
    io::write_cv_csv(dir / "cv.csv", ef.cv.table);
    write_fit_outputs(dir, Outputs{ef.loss, ef.penalty, ef.fit}, paths, train, cfg.rank_tol);
    spdlog::info("cv: selected lambda={} robustification={}", ef.cv.lambda,
                 ef.cv.robustification.value_or(0.0));
  }
}

void cmd_bench(const ExperimentConfig& cfg) {
  if (!cfg.bench) fail(Errc::BadConfig, "bench: required for bench");
  run_bench(*cfg.bench, cfg.seed, cfg.solver, cfg.jobs, cfg.out);
  std::cout << (cfg.out / "results.csv").string() << "\n";
}

std::size_t cmd_trace_plot(const fs::path& trace_csv, const fs::path& out) {
  if (!fs::exists(trace_csv)) fail(Errc::IoError, "trace file not found: " + trace_csv.string());
  const std::vector<IterationRecord> trace = io::read_trace_csv(trace_csv);
  std::string dat = "# iter objective increment_norm\n";
  for (const IterationRecord& r : trace) {
    dat += std::to_string(r.iter) + " " + format_double(r.objective) + " " +
           format_double(r.increment) + "\n";
  }
  io::write_text(out / "trace.dat", dat);
  const std::string gp =
      "set terminal pngcairo size 900,400\n"
      "set output 'trace.png'\n"
      "set multiplot layout 1,2\n"
      "set xlabel 'iteration'\n"
      "set ylabel 'objective'\n"
      "plot 'trace.dat' using 1:2 with linespoints title 'objective'\n"
      "set logscale y\n"
      "set ylabel 'increment norm'\n"
      "plot 'trace.dat' every ::1 using 1:3 with linespoints title 'increment'\n"
      "unset multiplot\n";
  io::write_text(out / "trace.gp", gp);
  return trace.size();
}

ExperimentConfig prepare_config(const Overrides& ov) {
  ExperimentConfig cfg;
  if (ov.config) {
    if (!fs::exists(*ov.config)) fail(Errc::IoError, "config not found: " + ov.config->string());
    cfg = load_config(*ov.config);
  }
  if (ov.seed) {
    cfg.seed = *ov.seed;
    if (cfg.sim) cfg.sim->seed = *ov.seed;
  }
  if (ov.jobs) {
    if (*ov.jobs < 1) fail(Errc::BadConfig, "--jobs must be >= 1");
    cfg.jobs = *ov.jobs;
  }
  if (ov.out) cfg.out = *ov.out;
  return cfg;
}

int run_cli(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Low-tubal-rank robust tensor regression"};
  app.require_subcommand(1);
  Overrides ov;
  std::string config, out;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON experiment config");
    sub->add_option("--seed", seed, "Base seed (overrides the config)");
    sub->add_option("--jobs", jobs, "Worker threads");
    sub->add_option("--out", out, "Output directory");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a dataset, B0 and a test set");
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit at a fixed lambda");
  CLI::App* cv = app.add_subcommand("cv", "Cross-validate, refit and report");
  CLI::App* bench = app.add_subcommand("bench", "Run replicated benchmark cells");
  for (CLI::App* sub : {simulate, fit_cmd, cv, bench}) add_common(sub);
  CLI::App* plot = app.add_subcommand("trace-plot", "Turn trace.csv into gnuplot-ready data");
  std::string trace_path;
  plot->add_option("trace", trace_path, "trace.csv from fit or cv")->required();
  plot->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    auto opt_flag = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* active = app.get_subcommands().front();
    if (active == plot) {
      const fs::path dir = out.empty() ? fs::path(trace_path).parent_path() : fs::path(out);
      const std::size_t n = cmd_trace_plot(trace_path, dir.empty() ? fs::path(".") : dir);
      std::cout << n << " points\n";
      return kOk;
    }
    if (opt_flag(active, "--config")) ov.config = config;
    if (opt_flag(active, "--seed")) ov.seed = seed;
    if (opt_flag(active, "--jobs")) ov.jobs = jobs;
    if (opt_flag(active, "--out")) ov.out = out;
    const ExperimentConfig cfg = prepare_config(ov);
    if (active == simulate) cmd_simulate(cfg);
    if (active == fit_cmd) cmd_fit(cfg);
    if (active == cv) cmd_cv(cfg);
    if (active == bench) cmd_bench(cfg);
    return kOk;
  } catch (const Error& e) {
    std::cerr << "tubalreg: error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "tubalreg: error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace tubalreg::cli
