#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "aperm/bounds.hpp"
#include "aperm/designs.hpp"
#include "aperm/linalg.hpp"
#include "aperm/mc_oracle.hpp"
#include "aperm/specfun.hpp"
#include "scenarios.hpp"

using namespace aperm;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (auto& x : m.reshaped()) x = z(rng);
  return m;
}

void BM_RegIncBeta(benchmark::State& state) {
  const BetaParams p(static_cast<double>(state.range(0)), 0.5);
  double u = 0.0;
  for (auto _ : state) {
    u += 1e-6;
    if (u >= 1.0) u = 1e-6;
    benchmark::DoNotOptimize(reg_inc_beta(u, p));
  }
}
BENCHMARK(BM_RegIncBeta)->Arg(2)->Arg(27)->Arg(500);

void BM_SchattenSymmetric(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd b = random_matrix(d, d, 1);
  const Eigen::MatrixXd a = b + b.transpose();
  const NormSpec s1(NormSpec::Space::schatten, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(schatten_norm_symmetric(a, s1));
}
BENCHMARK(BM_SchattenSymmetric)->Arg(20)->Arg(100);

void BM_SchattenRectangular(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd a = random_matrix(d, d / 2, 2);
  const NormSpec s1(NormSpec::Space::schatten, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(schatten_norm(a, s1));
}
BENCHMARK(BM_SchattenRectangular)->Arg(20)->Arg(100);

void BM_UnivariateMonteCarlo(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<double> v(200);
  for (auto& x : v) x = z(rng);
  const UnivariateStatistic stat(v);
  const StatisticFn f = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
  const double t = stat.evaluate(canonical_signs(100, 100));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_pvalue(f, t, 200, 100, static_cast<std::size_t>(state.range(0)), 4));
  }
}
BENCHMARK(BM_UnivariateMonteCarlo)->Arg(1000);

void BM_BanachCurveEvaluate(benchmark::State& state) {
  const Eigen::Index points = 50;
  const Eigen::MatrixXd m = random_matrix(points, 60, 5);
  const Eigen::VectorXd grid = uniform_grid(static_cast<std::size_t>(points));
  std::vector<GridCurve> curves;
  for (Eigen::Index i = 0; i < m.cols(); ++i) curves.emplace_back(grid, m.col(i));
  const BanachSum sum(curves, NormSpec(NormSpec::Space::function, 2.0));
  const Signs signs = canonical_signs(30, 30);
  for (auto _ : state) benchmark::DoNotOptimize(sum.evaluate(signs));
}
BENCHMARK(BM_BanachCurveEvaluate);

void BM_BanachOperatorEvaluate(benchmark::State& state) {
  std::vector<SymOperator> ops;
  for (unsigned i = 0; i < 20; ++i) {
    const Eigen::MatrixXd b = random_matrix(30, 30, 10 + i);
    ops.emplace_back(b * b.transpose());
  }
  const BanachSum sum(ops, NormSpec(NormSpec::Space::schatten, 1.0));
  const Signs signs = canonical_signs(10, 10);
  for (auto _ : state) benchmark::DoNotOptimize(sum.evaluate(signs));
}
BENCHMARK(BM_BanachOperatorEvaluate);

// Reduced CRBD layout: analytic pipeline against one timed permutation sweep.
void BM_CrbdAnalyticVsPermutation(benchmark::State& state) {
  sim::CrbdBenchConfig cfg;
  cfg.dim = 30;
  cfg.k = 6;
  cfg.blocks = 2;
  cfg.per_cell = 6;
  cfg.timed_perms = 1;
  for (auto _ : state) {
    const auto r = sim::run_crbd_bench(cfg);
    state.counters["analytic_s"] = r.analytic_seconds;
    state.counters["per_perm_s"] = r.per_perm_seconds;
    state.counters["speedup"] = r.speedup;
  }
}
BENCHMARK(BM_CrbdAnalyticVsPermutation)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
