#include <benchmark/benchmark.h>

#include <random>

#include "cbeta/econometrics.hpp"
#include "cbeta/factors.hpp"
#include "cbeta/pipeline.hpp"
#include "cbeta/synth.hpp"
#include "fixture.hpp"

using namespace cbeta;

namespace {

void BM_Ols(benchmark::State& state) {
  const auto n = state.range(0);
  const auto p = state.range(1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    X(r, 0) = 1.0;
    for (Eigen::Index c = 1; c < p; ++c) X(r, c) = z(rng);
    y(r) = z(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ols(X, y));
}
BENCHMARK(BM_Ols)->Args({730, 2})->Args({730, 13})->Args({730, 61});

SynthConfig synth_config(std::size_t coins, std::size_t days) {
  auto cfg = synth_preset("B");
  cfg.seed = 1;
  cfg.n_coins = coins;
  cfg.n_days = days;
  return cfg;
}

void BM_FirstPassConditionalCapm(benchmark::State& state) {
  const auto data = generate_synthetic(synth_config(20, 730));
  const auto rows = data.panel.of_coin(data.panel.coins().front());
  const std::vector<Factor> factors{Factor::Mkt};
  for (auto _ : state) benchmark::DoNotOptimize(first_pass(rows, data.factors, factors, data.truth.beta));
}
BENCHMARK(BM_FirstPassConditionalCapm);

void BM_BuildPanel(benchmark::State& state) {
  const auto fx = test_support::make_raw_fixture(static_cast<std::size_t>(state.range(0)), 730, 3);
  for (auto _ : state) benchmark::DoNotOptimize(test_support::build_fixture_panel(fx));
}
BENCHMARK(BM_BuildPanel)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BuildFactorSet(benchmark::State& state) {
  const auto panel = test_support::build_fixture_panel(test_support::make_raw_fixture(50, 730, 4));
  for (auto _ : state) benchmark::DoNotOptimize(build_factor_set(panel, FactorModel::ALL));
}
BENCHMARK(BM_BuildFactorSet)->Unit(benchmark::kMillisecond);

void BM_RunModel(benchmark::State& state) {
  const auto data = generate_synthetic(synth_config(50, 730));
  ModelSpec spec;
  spec.label = "bench";
  spec.beta = data.truth.beta;
  RunOptions opt;
  opt.factor_override = &data.factors;
  opt.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_model(data.panel, spec, opt));
}
BENCHMARK(BM_RunModel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
