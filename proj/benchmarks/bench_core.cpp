#include <benchmark/benchmark.h>

#include "flcrmf/fpca.hpp"
#include "flcrmf/frailty_cox.hpp"
#include "flcrmf/inference.hpp"
#include "flcrmf/pipeline.hpp"
#include "flcrmf/simulation.hpp"

using namespace flcrmf;

namespace {

SimulatedDataset study_data(Eigen::Index n, double phi) {
  SimConfig c;
  c.n = n;
  c.phi = phi;
  CounterRng rng(42);
  return simulate_dataset(n, c, TruthSpec{}, rng);
}

}  // namespace

static void BM_Concordance(benchmark::State& state) {
  const auto ds = study_data(state.range(0), 1.0);
  Eigen::VectorXd risk = ds.data.Z.col(0);
  for (auto _ : state) benchmark::DoNotOptimize(concordance(ds.data.records, risk));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Concordance)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNLogN);

static void BM_Fpca(benchmark::State& state) {
  const auto ds = study_data(state.range(0), 1.0);
  const BSplineBasis basis = build_bspline_basis(ds.data.grid, kDefaultSplineOrder, kDefaultBasisSize);
  for (auto _ : state) {
    const SmoothedCurves sm = smooth_curves(ds.data.curves, basis, kDefaultRidge);
    FpcaBasis fp = eigendecompose(empirical_covariance(sm, ds.data.grid));
    benchmark::DoNotOptimize(fp.eigenvalues.data());
  }
}
BENCHMARK(BM_Fpca)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FrailtyFit(benchmark::State& state) {
  const auto ds = study_data(state.range(0), 1.0);
  PipelineConfig config;
  config.frailty.frailty_enabled = state.range(1) != 0;
  for (auto _ : state) {
    const PipelineResult r = run_pipeline(ds.data, config);
    benchmark::DoNotOptimize(r.fit.alpha_hat);
  }
}
BENCHMARK(BM_FrailtyFit)->Args({250, 0})->Args({250, 1})->Args({1000, 1})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
