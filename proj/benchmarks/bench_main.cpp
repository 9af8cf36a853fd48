#include <benchmark/benchmark.h>

#include "tubalreg/datagen.hpp"
#include "tubalreg/loss.hpp"
#include "tubalreg/model.hpp"
#include "tubalreg/solver.hpp"
#include "tubalreg/tsvd.hpp"

using namespace tubalreg;

namespace {

SimSpec spec_for(Index n, Index d, Index d3) {
  SimSpec s;
  s.n = n;
  s.d1 = s.d2 = d;
  s.d3 = d3;
  s.r = 2;
  s.seed = 11;
  return s;
}

Tensor3 random_tensor(Index d, Index d3) {
  const SimSpec s = spec_for(10, d, d3);
  return gen_coef(s);
}

}  // namespace

static void BM_TProduct(benchmark::State& state) {
  const Index d = state.range(0);
  const Tensor3 a = random_tensor(d, 3), b = random_tensor(d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tprod(a, b));
}
BENCHMARK(BM_TProduct)->Arg(10)->Arg(20)->Arg(40);

static void BM_TSvd(benchmark::State& state) {
  const Index d = state.range(0);
  const Tensor3 a = random_tensor(d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(tsvd(a));
}
BENCHMARK(BM_TSvd)->Arg(10)->Arg(20)->Arg(40);

static void BM_WeightedTsvt(benchmark::State& state) {
  const Index d = state.range(0);
  const Tensor3 g = random_tensor(d, 3);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(d, 3, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_tsvt(g, w, 1.0));
}
BENCHMARK(BM_WeightedTsvt)->Arg(10)->Arg(20)->Arg(40);

static void BM_Gradient(benchmark::State& state) {
  const SimSpec s = spec_for(state.range(0), 20, 3);
  const Tensor3 b0 = gen_coef(s);
  const Dataset data = gen_dataset(s, b0);
  const LossSpec loss = huber_loss(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(loss, b0, data));
}
BENCHMARK(BM_Gradient)->Arg(500)->Arg(2000);

static void BM_SolverStep(benchmark::State& state) {
  const SimSpec s = spec_for(state.range(0), 20, 3);
  const Tensor3 b0 = gen_coef(s);
  const Dataset data = gen_dataset(s, b0);
  const Tensor3 init = default_init(data, squared_loss());
  const Eigen::MatrixXd sigma = singular_values(init);
  const PenaltySpec p = make_penalty(PenaltyKind::MCP, 0.5, 3.0);
  const SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(init, sigma, 1.0, squared_loss(), data, p, cfg));
  }
}
BENCHMARK(BM_SolverStep)->Arg(2000);

static void BM_Fit(benchmark::State& state) {
  const SimSpec s = spec_for(2000, 20, 3);
  const Tensor3 b0 = gen_coef(s);
  const Dataset data = gen_dataset(s, b0);
  const Tensor3 init = default_init(data, squared_loss());
  const PenaltySpec p = make_penalty(PenaltyKind::MCP, 0.5, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, squared_loss(), p, SolverConfig{}, init));
}
BENCHMARK(BM_Fit)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
