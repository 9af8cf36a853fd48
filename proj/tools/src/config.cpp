#include "tubalreg_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "tubalreg/error.hpp"
#include "tubalreg/io.hpp"

namespace tubalreg::cli {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(Errc::BadConfig, key + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "missing or of the wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key, where);
}

// Module parse errors become config errors that name the key.
template <typename F>
auto rethrow_as_config(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::BadConfig) throw;
    bad(key, e.what());
  }
}

std::vector<double> number_list(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return get<std::vector<double>>(j, key, where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

SimSpec sim_from_json(const json& j, const SimSpec& base) {
  const std::string w = "sim";
  check_keys(j,
             {"n", "d", "d1", "d2", "d3", "r", "design", "noise", "misspec_pm", "corrupt_pn",
              "corrupt_pc", "shape", "seed"},
             w);
  SimSpec s = base;
  if (auto v = get_opt<Index>(j, "d", w)) s.d1 = s.d2 = *v;
  if (auto v = get_opt<Index>(j, "n", w)) s.n = *v;
  if (auto v = get_opt<Index>(j, "d1", w)) s.d1 = *v;
  if (auto v = get_opt<Index>(j, "d2", w)) s.d2 = *v;
  if (auto v = get_opt<Index>(j, "d3", w)) s.d3 = *v;
  if (auto v = get_opt<Index>(j, "r", w)) s.r = *v;
  if (auto v = get_opt<std::string>(j, "design", w)) {
    s.design = rethrow_as_config("sim.design", [&] { return design_from_string(*v); });
  }
  if (auto v = get_opt<std::string>(j, "noise", w)) {
    s.noise = rethrow_as_config("sim.noise", [&] { return parse_noise(*v); });
  }
  if (auto v = get_opt<double>(j, "misspec_pm", w)) s.misspec_pm = *v;
  if (auto v = get_opt<double>(j, "corrupt_pn", w)) s.corrupt_pn = *v;
  if (auto v = get_opt<double>(j, "corrupt_pc", w)) s.corrupt_pc = *v;
  if (j.contains("shape")) {
    if (j.at("shape").is_null()) {
      s.shape.reset();
    } else {
      const auto name = get<std::string>(j, "shape", w);
      if (name == "none") {
        s.shape.reset();
      } else {
        s.shape = rethrow_as_config("sim.shape", [&] { return shape_from_string(name); });
      }
    }
  }
  if (auto v = get_opt<std::uint64_t>(j, "seed", w)) s.seed = *v;
  return s;
}

json sim_to_json(const SimSpec& s) {
  json j = {{"n", s.n},
            {"d1", s.d1},
            {"d2", s.d2},
            {"d3", s.d3},
            {"r", s.r},
            {"design", std::string(to_string(s.design))},
            {"noise", format_noise(s.noise)},
            {"misspec_pm", s.misspec_pm},
            {"corrupt_pn", s.corrupt_pn},
            {"corrupt_pc", s.corrupt_pc},
            {"shape", nullptr},
            {"seed", s.seed}};
  if (s.shape) j["shape"] = std::string(to_string(*s.shape));
  return j;
}

SolverConfig solver_from_json(const json& j) {
  const std::string w = "solver";
  check_keys(j,
             {"eta0", "kappa", "alpha", "eps_tol", "max_iter", "max_backtrack", "eta_min",
              "eta_max"},
             w);
  SolverConfig c;
  if (auto v = get_opt<double>(j, "eta0", w)) c.eta0 = *v;
  if (auto v = get_opt<double>(j, "kappa", w)) c.kappa = *v;
  if (auto v = get_opt<double>(j, "alpha", w)) c.alpha = *v;
  if (auto v = get_opt<double>(j, "eps_tol", w)) c.eps_tol = *v;
  if (auto v = get_opt<int>(j, "max_iter", w)) c.max_iter = *v;
  if (auto v = get_opt<int>(j, "max_backtrack", w)) c.max_backtrack = *v;
  if (auto v = get_opt<double>(j, "eta_min", w)) c.eta_min = *v;
  if (auto v = get_opt<double>(j, "eta_max", w)) c.eta_max = *v;
  rethrow_as_config("solver", [&] { c.validate(); });
  return c;
}

json solver_to_json(const SolverConfig& s) {
  return {{"eta0", s.eta0},         {"kappa", s.kappa},       {"alpha", s.alpha},
          {"eps_tol", s.eps_tol},   {"max_iter", s.max_iter}, {"max_backtrack", s.max_backtrack},
          {"eta_min", s.eta_min},   {"eta_max", s.eta_max}};
}

EstimatorConfig estimator_from_json(const json& j) {
  const std::string w = "estimator";
  check_keys(j, {"loss", "loss_param", "penalty", "gamma", "lambda_grid", "robust_grid", "folds"},
             w);
  EstimatorConfig e;
  if (auto v = get_opt<std::string>(j, "loss", w)) {
    const bool with_param = v->find('(') != std::string::npos;
    const LossSpec parsed = rethrow_as_config("estimator.loss", [&] {
      return with_param ? parse_loss(*v) : LossSpec{loss_kind_from_string(*v), 0.0};
    });
    e.loss = parsed.kind;
    // "huber(upsilon=1.5)" pins the reference parameter.
    if (v->find('(') != std::string::npos) e.loss_param = parsed.param;
  }
  if (auto v = get_opt<double>(j, "loss_param", w)) e.loss_param = *v;
  if (auto v = get_opt<std::string>(j, "penalty", w)) {
    e.penalty = rethrow_as_config("estimator.penalty", [&] { return penalty_kind_from_string(*v); });
  }
  e.gamma = get_opt<double>(j, "gamma", w);
  e.lambda_grid = number_list(j, "lambda_grid", w);
  e.robust_grid = number_list(j, "robust_grid", w);
  if (auto v = get_opt<int>(j, "folds", w)) e.folds = *v;
  if (e.folds < 2) bad("estimator.folds", "must be >= 2");
  if (e.loss_param && !has_robustification(e.loss)) {
    bad("estimator.loss_param", "loss has no robustification parameter");
  }
  if (!e.robust_grid.empty() && !has_robustification(e.loss)) {
    bad("estimator.robust_grid", "loss has no robustification parameter");
  }
  for (double l : e.lambda_grid) {
    if (!(l > 0.0)) bad("estimator.lambda_grid", "entries must be > 0");
  }
  for (double r : e.robust_grid) {
    if (!(r > 0.0)) bad("estimator.robust_grid", "entries must be > 0");
  }
  const double g = e.gamma.value_or(default_gamma(e.penalty));
  rethrow_as_config("estimator.gamma", [&] { make_penalty(e.penalty, 1.0, g); });
  return e;
}

json estimator_to_json(const EstimatorConfig& e) {
  json j = {{"loss", std::string(to_string(e.loss))},
            {"penalty", std::string(to_string(e.penalty))},
            {"folds", e.folds}};
  if (e.loss_param) j["loss_param"] = *e.loss_param;
  if (e.gamma) j["gamma"] = *e.gamma;
  if (!e.lambda_grid.empty()) j["lambda_grid"] = e.lambda_grid;
  if (!e.robust_grid.empty()) j["robust_grid"] = e.robust_grid;
  return j;
}

EstimatorSpec resolve_estimator(const EstimatorConfig& e, const Dataset& data,
                                std::uint64_t seed, const SolverConfig& solver, int jobs) {
  GridOptions grid;
  EstimatorSpec spec;
  const bool need_auto = e.lambda_grid.empty() ||
                         (has_robustification(e.loss) && !e.loss_param && e.robust_grid.empty());
  if (need_auto) {
    spec = default_estimator(data, e.loss, e.penalty, seed, solver, grid);
  } else {
    spec.loss = LossSpec{e.loss, 0.0};
    spec.penalty = e.penalty;
    spec.seed = seed;
    spec.solver = solver;
  }
  spec.gamma = e.gamma.value_or(default_gamma(e.penalty));
  if (e.loss_param) spec.loss.param = *e.loss_param;
  if (has_robustification(e.loss) && !(spec.loss.param > 0.0)) {
    spec.loss.param = reference_robustification(e.loss, data);
  }
  if (!e.robust_grid.empty()) spec.robust_grid = e.robust_grid;
  if (!e.lambda_grid.empty()) {
    spec.lambda_grid = e.lambda_grid;
  } else if (e.gamma && *e.gamma != default_gamma(e.penalty)) {
    // The automatic grid was built for the default gamma; rebuild for this one.
    const double anchor = default_anchor(data, spec.loss, seed, grid);
    spec.lambda_grid = lambda_grid_for(e.penalty, *e.gamma, anchor, grid.lambda_multipliers);
  }
  spec.folds = e.folds;
  spec.jobs = jobs;
  spec.validate(data.n());
  return spec;
}

BenchConfig bench_from_json(const json& j) {
  const std::string w = "bench";
  check_keys(j,
             {"sim", "designs", "noises", "ns", "ranks", "misspec", "losses", "penalties",
              "replications", "test_size", "rank_tol"},
             w);
  BenchConfig b;
  if (j.contains("sim")) b.base = sim_from_json(j.at("sim"));
  for (const auto& s : get_opt<std::vector<std::string>>(j, "designs", w).value_or(std::vector<std::string>{})) {
    b.designs.push_back(rethrow_as_config("bench.designs", [&] { return design_from_string(s); }));
  }
  for (const auto& s : get_opt<std::vector<std::string>>(j, "noises", w).value_or(std::vector<std::string>{})) {
    b.noises.push_back(rethrow_as_config("bench.noises", [&] { return parse_noise(s); }));
  }
  b.ns = get_opt<std::vector<Index>>(j, "ns", w).value_or(std::vector<Index>{});
  b.ranks = get_opt<std::vector<Index>>(j, "ranks", w).value_or(std::vector<Index>{});
  b.misspec = get_opt<std::vector<double>>(j, "misspec", w).value_or(std::vector<double>{});
  for (const auto& s : get_opt<std::vector<std::string>>(j, "losses", w).value_or(std::vector<std::string>{"squared"})) {
    b.losses.push_back(rethrow_as_config("bench.losses", [&] { return loss_kind_from_string(s); }));
  }
  for (const auto& s : get_opt<std::vector<std::string>>(j, "penalties", w).value_or(std::vector<std::string>{"mcp"})) {
    b.penalties.push_back(
        rethrow_as_config("bench.penalties", [&] { return penalty_kind_from_string(s); }));
  }
  if (auto v = get_opt<int>(j, "replications", w)) b.replications = *v;
  if (b.replications < 1) bad("bench.replications", "must be >= 1");
  b.test_size = get_opt<Index>(j, "test_size", w);
  if (b.test_size && *b.test_size < 1) bad("bench.test_size", "must be >= 1");
  if (auto v = get_opt<double>(j, "rank_tol", w)) b.rank_tol = *v;
  if (b.losses.empty() || b.penalties.empty()) bad("bench", "losses and penalties must be nonempty");
  return b;
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  check_keys(j,
             {"sim", "estimator", "estimators", "solver", "bench", "data", "b0", "test", "lambda",
              "test_size", "rank_tol", "out", "jobs", "seed", "replications"},
             "");
  ExperimentConfig c;
  if (auto v = get_opt<std::uint64_t>(j, "seed", "")) c.seed = *v;
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  if (j.contains("sim")) {
    SimSpec base;
    base.seed = c.seed;
    c.sim = sim_from_json(j.at("sim"), base);
    rethrow_as_config("sim", [&] { c.sim->validate(); });
  }
  if (j.contains("estimator")) c.estimators.push_back(estimator_from_json(j.at("estimator")));
  if (j.contains("estimators")) {
    if (!j.at("estimators").is_array()) bad("estimators", "expected an array");
    for (const auto& e : j.at("estimators")) c.estimators.push_back(estimator_from_json(e));
  }
  if (j.contains("bench")) {
    c.bench = bench_from_json(j.at("bench"));
    if (auto reps = get_opt<int>(j, "replications", "")) c.bench->replications = *reps;
    // Validate every cell's sim spec up front.
    BenchConfig& b = *c.bench;
    for (Design d : b.designs.empty() ? std::vector<Design>{b.base.design} : b.designs) {
      for (Index n : b.ns.empty() ? std::vector<Index>{b.base.n} : b.ns) {
        for (Index r : b.ranks.empty() ? std::vector<Index>{b.base.r} : b.ranks) {
          for (double pm : b.misspec.empty() ? std::vector<double>{b.base.misspec_pm} : b.misspec) {
            SimSpec s = b.base;
            s.design = d;
            s.n = n;
            s.r = r;
            s.misspec_pm = pm;
            rethrow_as_config("bench", [&] { s.validate(); });
          }
        }
      }
    }
  }
  if (auto v = get_opt<std::string>(j, "data", "")) c.data = resolve(base_dir, *v);
  if (auto v = get_opt<std::string>(j, "b0", "")) c.b0 = resolve(base_dir, *v);
  if (auto v = get_opt<std::string>(j, "test", "")) c.test = resolve(base_dir, *v);
  c.lambda = get_opt<double>(j, "lambda", "");
  if (c.lambda && !(*c.lambda >= 0.0)) bad("lambda", "must be >= 0");
  c.test_size = get_opt<Index>(j, "test_size", "");
  if (c.test_size && *c.test_size < 1) bad("test_size", "must be >= 1");
  if (auto v = get_opt<double>(j, "rank_tol", "")) c.rank_tol = *v;
  if (!(c.rank_tol > 0.0)) bad("rank_tol", "must be > 0");
  if (auto v = get_opt<std::string>(j, "out", "")) c.out = *v;
  if (auto v = get_opt<int>(j, "jobs", "")) c.jobs = *v;
  if (c.jobs < 1) bad("jobs", "must be >= 1");
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error&) {
    fail(Errc::IoError, "cannot read config " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::BadConfig, path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace tubalreg::cli
