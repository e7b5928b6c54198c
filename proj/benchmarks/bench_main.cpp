#include <benchmark/benchmark.h>

#include <memory>

#include "basofr/basis.hpp"
#include "basofr/dhs.hpp"
#include "basofr/fused_lasso.hpp"
#include "basofr/gibbs.hpp"

using namespace basofr;

namespace {

RegressionDesign random_design(Eigen::Index n, Eigen::Index kb) {
  Rng rng = make_rng(1);
  RegressionDesign d;
  d.x_star_star.resize(n, kb);
  for (auto& v : d.x_star_star.reshaped()) v = 0.1 * std_normal(rng);
  d.z = Eigen::MatrixXd::Ones(n, 1);
  d.penalized = {false};
  d.y.resize(n);
  for (auto& v : d.y) v = std_normal(rng);
  return d;
}

}  // namespace

static void BM_GibbsSweep(benchmark::State& state) {
  const auto design = random_design(state.range(0), 53);
  FitConfig cfg;
  cfg.prior = static_cast<PriorKind>(state.range(1));
  GibbsSampler g(design, cfg);
  Rng rng = make_rng(2);
  for (int i = 0; i < 50; ++i) g.sweep(rng);
  for (auto _ : state) g.sweep(rng);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GibbsSweep)
    ->ArgsProduct({{500, 5000, 50000}, {0}})
    ->Args({5000, 1})
    ->Args({5000, 2})
    ->Unit(benchmark::kMicrosecond);

static void BM_LogVolatilities(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  DhsConfig cfg;
  Rng rng = make_rng(3);
  DhsState st = sample_dhs_prior(k, cfg, rng);
  Eigen::VectorXd d2(k);
  for (auto& v : d2) v = std_normal(rng);
  for (auto _ : state) {
    st.indicators = sample_mixture_indicators(d2, st.h, rng);
    sample_log_vols(d2, st, cfg, rng);
    sample_pg_auxiliaries(st, cfg, rng);
    sample_ar_params(st, cfg, rng);
  }
  state.SetComplexityN(k);
}
BENCHMARK(BM_LogVolatilities)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oN);

static void BM_CrossGram(benchmark::State& state) {
  const BSplineBasis bx({0.0, 1.0}, static_cast<int>(state.range(0)));
  const BSplineBasis bb({0.0, 1.0}, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cross_gram(bx, bb, {0.1, 0.9}).values.data());
}
BENCHMARK(BM_CrossGram)->Arg(53)->Arg(103)->Arg(203);

static void BM_FusedLassoPath(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  Rng rng = make_rng(4);
  Eigen::MatrixXd a(5 * k, k);
  for (auto& v : a.reshaped()) v = std_normal(rng);
  Eigen::VectorXd y(5 * k);
  for (auto& v : y) v = std_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fused_lasso_path(a, y).knots.size());
}
BENCHMARK(BM_FusedLassoPath)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
