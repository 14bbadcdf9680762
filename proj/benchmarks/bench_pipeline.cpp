#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "rcds/expansion.hpp"
#include "rcds/glm.hpp"
#include "rcds/msm.hpp"
#include "rcds/simulator.hpp"
#include "rcds/weights.hpp"

using namespace rcds;

namespace {

std::shared_ptr<const Cohort> cohort_of(std::size_t n) {
  return std::make_shared<const Cohort>(simulate_cohort(DgpParams{}, n));
}

AnalysisOptions marginal() {
  AnalysisOptions o;
  o.weights.numerator = Numerator::marginal;
  return o;
}

void BM_Irls(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::Index p = 8;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> norm;
  DesignMatrix d;
  d.x.resize(n, p);
  d.weights = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < p; ++j) d.columns.push_back(j == 0 ? "(Intercept)" : "v" + std::to_string(j));
  std::vector<double> y(static_cast<std::size_t>(n));
  std::bernoulli_distribution coin(0.3);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) d.x(i, j) = norm(rng);
    y[static_cast<std::size_t>(i)] = coin(rng) ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_glm(d, y, Family::binomial_logit));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Irls)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Expand(benchmark::State& state) {
  const auto c = cohort_of(static_cast<std::size_t>(state.range(0)));
  const auto grid = StrategyGrid::default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(expand(c, grid));
}
BENCHMARK(BM_Expand)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_AttachWeights(benchmark::State& state) {
  const auto c = cohort_of(static_cast<std::size_t>(state.range(0)));
  const auto ds = std::make_shared<const ExpandedDataset>(expand(c, StrategyGrid::default_grid()));
  const auto model = fit_monitor_model(*c, {});
  for (auto _ : state) benchmark::DoNotOptimize(attach_weights(ds, model, {Numerator::marginal, {}}));
}
BENCHMARK(BM_AttachWeights)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Estimate(benchmark::State& state) {
  const auto c = cohort_of(static_cast<std::size_t>(state.range(0)));
  const auto grid = StrategyGrid::default_grid();
  const auto options = marginal();
  for (auto _ : state) benchmark::DoNotOptimize(estimate(c, grid, options));
}
BENCHMARK(BM_Estimate)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
