#include <benchmark/benchmark.h>

#include <vector>

#include "nlffr/funcdata.hpp"
#include "nlffr/inference.hpp"
#include "nlffr/parallel.hpp"
#include "nlffr/reference.hpp"
#include "nlffr/regression.hpp"
#include "nlffr/sim.hpp"

namespace {

nlffr::sim::Sample sample(int n, nlffr::sim::Design design) {
  nlffr::sim::ScenarioConfig cfg;
  cfg.design = design;
  return nlffr::sim::generate_sample(cfg, n, 7);
}

std::vector<nlffr::RecoveredCurve> recovered(const std::vector<nlffr::ObservedCurve>& curves) {
  const auto k = nlffr::TimeKernel::gaussian(7.0);
  std::vector<nlffr::RecoveredCurve> out;
  for (const auto& c : curves) out.push_back(nlffr::recover(c, k, 1e-4));
  return out;
}

void BM_HxGram(benchmark::State& state) {
  const auto curves = recovered(sample(static_cast<int>(state.range(0)), nlffr::sim::Design::Sparse).x);
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::hx_gram(curves));
}

void BM_HxGramReference(benchmark::State& state) {
  const auto curves = recovered(sample(static_cast<int>(state.range(0)), nlffr::sim::Design::Sparse).x);
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::reference::hx_gram(curves));
}

void BM_SmoothingGcv(benchmark::State& state) {
  const auto s = sample(static_cast<int>(state.range(0)), nlffr::sim::Design::Dense);
  const auto eps = nlffr::default_smoothing_eps_grid();
  const auto gam = nlffr::default_smoothing_gamma_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        nlffr::gcv_smoothing_scores(s.x, nlffr::TimeKernelKind::GaussianRBF, eps, gam));
  }
}

void BM_RegressionGcv(benchmark::State& state) {
  const auto s = sample(static_cast<int>(state.range(0)), nlffr::sim::Design::Dense);
  const auto hx = nlffr::hx_gram(recovered(s.x));
  const auto hy = nlffr::hx_gram(recovered(s.y));
  const auto tuning = nlffr::default_fit_config(nlffr::TimeKernelKind::GaussianRBF).regression;
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::regression_gcv_scores(hx, hy, tuning));
}

void BM_RegressionGcvReference(benchmark::State& state) {
  const auto s = sample(static_cast<int>(state.range(0)), nlffr::sim::Design::Dense);
  const auto hx = nlffr::hx_gram(recovered(s.x));
  const auto hy = nlffr::hx_gram(recovered(s.y));
  const auto tuning = nlffr::default_fit_config(nlffr::TimeKernelKind::GaussianRBF).regression;
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::reference::regression_gcv_scores(hx, hy, tuning));
}

Eigen::MatrixXd brownian_cov(int m) {
  Eigen::MatrixXd c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c(i, j) = (std::min(i, j) + 1.0) / m;
  return c;
}

void BM_SupNorms(benchmark::State& state) {
  const auto cov = brownian_cov(50);
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::simulate_sup_norms(cov, state.range(0), 1));
}

void BM_SupNormsReference(benchmark::State& state) {
  const auto cov = brownian_cov(50);
  for (auto _ : state) benchmark::DoNotOptimize(nlffr::reference::simulate_sup_norms(cov, state.range(0), 1));
}

}  // namespace

BENCHMARK(BM_HxGram)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HxGramReference)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoothingGcv)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegressionGcv)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RegressionGcvReference)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SupNorms)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SupNormsReference)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
