#include "tubalreg_cli/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "tubalreg/error.hpp"
#include "tubalreg/io.hpp"
#include "tubalreg/rng.hpp"

namespace tubalreg::cli {

namespace {

using io::format_double;

json meta_record(std::uint64_t base_seed, const SolverConfig& solver, const BenchConfig& cfg) {
  return {{"meta",
           {{"seed", base_seed},
            {"solver", solver_to_json(solver)},
            {"test_size", cfg.test_size ? json(*cfg.test_size) : json(nullptr)},
            {"rank_tol", cfg.rank_tol}}}};
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : fallback;
}

}  // namespace

std::string BenchCell::key() const {
  std::ostringstream os;
  os << "design=" << to_string(sim.design) << ";noise=" << format_noise(sim.noise)
     << ";n=" << sim.n << ";d1=" << sim.d1 << ";d2=" << sim.d2 << ";d3=" << sim.d3
     << ";r=" << sim.r << ";pm=" << format_double(sim.misspec_pm)
     << ";pn=" << format_double(sim.corrupt_pn) << ";pc=" << format_double(sim.corrupt_pc)
     << ";shape=" << (sim.shape ? std::string(to_string(*sim.shape)) : std::string("none"))
     << ";loss=" << to_string(loss) << ";penalty=" << to_string(penalty);
  return os.str();
}

std::vector<BenchCell> expand_cells(const BenchConfig& cfg) {
  const auto designs = cfg.designs.empty() ? std::vector<Design>{cfg.base.design} : cfg.designs;
  const auto noises = cfg.noises.empty() ? std::vector<NoiseSpec>{cfg.base.noise} : cfg.noises;
  const auto ns = cfg.ns.empty() ? std::vector<Index>{cfg.base.n} : cfg.ns;
  const auto ranks = cfg.ranks.empty() ? std::vector<Index>{cfg.base.r} : cfg.ranks;
  const auto pms = cfg.misspec.empty() ? std::vector<double>{cfg.base.misspec_pm} : cfg.misspec;
  std::vector<BenchCell> cells;
  for (Design d : designs) {
    for (const NoiseSpec& noise : noises) {
      for (Index n : ns) {
        for (Index r : ranks) {
          for (double pm : pms) {
            for (LossKind loss : cfg.losses) {
              for (PenaltyKind pen : cfg.penalties) {
                BenchCell c;
                c.sim = cfg.base;
                c.sim.design = d;
                c.sim.noise = noise;
                c.sim.n = n;
                c.sim.r = r;
                c.sim.misspec_pm = pm;
                c.loss = loss;
                c.penalty = pen;
                cells.push_back(c);
              }
            }
          }
        }
      }
    }
  }
  return cells;
}

std::uint64_t replication_seed(std::uint64_t base_seed, int rep) {
  return derive_seed(base_seed, "rep", static_cast<std::uint64_t>(rep));
}

RepOutcome run_replication(const BenchCell& cell, int rep, std::uint64_t base_seed,
                           const RepOptions& opt) {
  RepOutcome out;
  out.cell = cell.key();
  out.rep = rep;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SimSpec sim = cell.sim;
    sim.seed = replication_seed(base_seed, rep);
    const Tensor3 b0 = gen_coef(sim);
    const Dataset train = gen_dataset(sim, b0);
    const Dataset test = gen_test_dataset(sim, b0, opt.test_size.value_or(sim.n));
    EstimatorSpec spec = default_estimator(train, cell.loss, cell.penalty,
                                           derive_seed(sim.seed, "cv"), opt.solver, opt.grid);
    spec.jobs = opt.jobs;
    const EstimatorFit fit = fit_estimator(train, spec);
    out.report = evaluate(fit.fit.b_hat, b0, test, fit.loss, opt.rank_tol);
    out.lambda = fit.cv.lambda;
    out.robustification = fit.cv.robustification.value_or(0.0);
    out.iterations = fit.fit.iterations;
    out.converged = fit.fit.converged;
  } catch (const Error& e) {
    out.status = "error:" + std::string(to_string(e.code()));
    spdlog::warn("{} rep {} failed: {}", out.cell, rep, e.what());
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Stat summarize_values(std::span<const double> v) {
  Stat s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) {
    s.mean = std::nan("");
    s.se = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

CellSummary summarize_cell(const BenchCell& cell, std::span<const RepOutcome> outcomes) {
  CellSummary s;
  s.cell = cell;
  std::vector<double> err, log_err, nuc, rank, pe, acc;
  for (const RepOutcome& o : outcomes) {
    if (o.status != "ok") {
      ++s.failed;
      continue;
    }
    ++s.reps;
    err.push_back(o.report.err);
    if (std::isfinite(o.report.log_err)) log_err.push_back(o.report.log_err);
    nuc.push_back(o.report.nuc_err);
    rank.push_back(o.report.r_hat);
    pe.push_back(o.report.pe);
    if (o.report.accuracy) acc.push_back(*o.report.accuracy);
  }
  s.err = summarize_values(err);
  s.log_err = summarize_values(log_err);
  s.nuc_err = summarize_values(nuc);
  s.r_hat = summarize_values(rank);
  s.pe = summarize_values(pe);
  s.accuracy = summarize_values(acc);
  s.status = s.failed == 0 ? "ok" : (s.reps == 0 ? "failed" : "partial");
  return s;
}

std::string results_csv(std::span<const CellSummary> cells) {
  std::string s =
      "design,noise,n,d1,d2,d3,r,misspec_pm,corrupt_pn,corrupt_pc,shape,loss,penalty,reps,failed,"
      "err_mean,err_se,log_err_mean,log_err_se,nuc_err_mean,nuc_err_se,r_hat_mean,r_hat_se,"
      "pe_mean,pe_se,accuracy_mean,accuracy_se,status\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
  for (const CellSummary& c : cells) {
    const SimSpec& sim = c.cell.sim;
    // Noise specs contain commas; quote them.
    s += std::string(to_string(sim.design)) + ",\"" + format_noise(sim.noise) + "\"," +
         std::to_string(sim.n) + "," + std::to_string(sim.d1) + "," + std::to_string(sim.d2) +
         "," + std::to_string(sim.d3) + "," + std::to_string(sim.r) + "," +
         format_double(sim.misspec_pm) + "," + format_double(sim.corrupt_pn) + "," +
         format_double(sim.corrupt_pc) + "," +
         (sim.shape ? std::string(to_string(*sim.shape)) : std::string("none")) + "," +
         std::string(to_string(c.cell.loss)) + "," + std::string(to_string(c.cell.penalty)) +
         "," + std::to_string(c.reps) + "," + std::to_string(c.failed);
    for (const Stat* st : {&c.err, &c.log_err, &c.nuc_err, &c.r_hat, &c.pe, &c.accuracy}) {
      s += "," + num(st->mean) + "," + num(st->se);
    }
    s += "," + c.status + "\n";
  }
  return s;
}

json outcome_to_json(const RepOutcome& o) {
  return {{"cell", o.cell},
          {"rep", o.rep},
          {"status", o.status},
          {"err", nullable(o.report.err)},
          {"log_err", nullable(o.report.log_err)},
          {"nuc_err", nullable(o.report.nuc_err)},
          {"r_hat", o.report.r_hat},
          {"pe", nullable(o.report.pe)},
          {"accuracy", o.report.accuracy ? json(*o.report.accuracy) : json(nullptr)},
          {"lambda", o.lambda},
          {"robustification", o.robustification},
          {"iterations", o.iterations},
          {"converged", o.converged},
          {"seconds", o.seconds}};
}

RepOutcome outcome_from_json(const json& j) {
  RepOutcome o;
  o.cell = j.at("cell").get<std::string>();
  o.rep = j.at("rep").get<int>();
  o.status = j.at("status").get<std::string>();
  o.report.err = number_or(j, "err", std::nan(""));
  o.report.log_err = number_or(j, "log_err", -std::numeric_limits<double>::infinity());
  o.report.nuc_err = number_or(j, "nuc_err", std::nan(""));
  o.report.r_hat = j.value("r_hat", 0);
  o.report.pe = number_or(j, "pe", std::nan(""));
  if (j.contains("accuracy") && j.at("accuracy").is_number()) {
    o.report.accuracy = j.at("accuracy").get<double>();
  }
  o.lambda = number_or(j, "lambda", 0.0);
  o.robustification = number_or(j, "robustification", 0.0);
  o.iterations = j.value("iterations", 0);
  o.converged = j.value("converged", false);
  o.seconds = number_or(j, "seconds", 0.0);
  return o;
}

std::vector<CellSummary> run_bench(const BenchConfig& cfg, std::uint64_t base_seed,
                                   const SolverConfig& solver, int jobs, const fs::path& out) {
  const std::vector<BenchCell> cells = expand_cells(cfg);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(Errc::IoError, "cannot create " + out.string());
  const fs::path progress = out / "progress.jsonl";
  const json meta = meta_record(base_seed, solver, cfg);

  // Completed (cell, rep) pairs from an earlier run. A truncated last line
  // (interrupted write) is dropped.
  std::map<std::pair<std::string, int>, RepOutcome> done;
  auto load_progress = [&] {
    done.clear();
    if (!fs::exists(progress)) return false;
    std::ifstream is(progress);
    if (!is) fail(Errc::IoError, "cannot read " + progress.string());
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        continue;
      }
      if (first) {
        first = false;
        if (!j.contains("meta") || j != meta) {
          fail(Errc::BadConfig, progress.string() +
                                    " was written with a different seed or solver configuration");
        }
        continue;
      }
      RepOutcome o = outcome_from_json(j);
      done[{o.cell, o.rep}] = std::move(o);
    }
    return !first;
  };
  const bool has_meta = load_progress();

  std::vector<std::pair<std::size_t, int>> todo;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int rep = 0; rep < cfg.replications; ++rep) {
      if (!done.count({cells[c].key(), rep})) todo.emplace_back(c, rep);
    }
  }
  spdlog::info("bench: {} cells, {} replications each, {} runs pending", cells.size(),
               cfg.replications, todo.size());

  {
    bool torn = false;
    if (has_meta) {
      std::ifstream tail(progress, std::ios::binary | std::ios::ate);
      if (tail && tail.tellg() > 0) {
        tail.seekg(-1, std::ios::end);
        torn = tail.get() != '\n';
      }
    }
    std::ofstream log(progress, std::ios::app);
    if (!log) fail(Errc::IoError, "cannot write " + progress.string());
    if (torn) log << "\n";
    if (!has_meta) {
      // Rewrite from scratch so the meta record is first.
      log.close();
      log.open(progress, std::ios::trunc);
      log << meta.dump() << "\n";
      log.flush();
    }
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    RepOptions opt;
    opt.solver = solver;
    opt.test_size = cfg.test_size;
    opt.rank_tol = cfg.rank_tol;
    auto worker = [&] {
      for (std::size_t t = next++; t < todo.size(); t = next++) {
        const auto [c, rep] = todo[t];
        const RepOutcome o = run_replication(cells[c], rep, base_seed, opt);
        std::lock_guard lock(mu);
        log << outcome_to_json(o).dump() << "\n";
        log.flush();
        spdlog::info("[{}/{}] {} rep {}: {} err={}", t + 1, todo.size(), o.cell, rep, o.status,
                     o.report.err);
      }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(todo.size())));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (!log) fail(Errc::IoError, "write failed: " + progress.string());
  }

  load_progress();
  std::vector<CellSummary> summaries;
  for (const BenchCell& cell : cells) {
    std::vector<RepOutcome> outcomes;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      auto it = done.find({cell.key(), rep});
      if (it != done.end()) outcomes.push_back(it->second);
    }
    summaries.push_back(summarize_cell(cell, outcomes));
  }
  io::write_text(out / "results.csv", results_csv(summaries));
  return summaries;
}

}  // namespace tubalreg::cli
