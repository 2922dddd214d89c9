// Serial reference loops against the chunked OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "dualnewton/kernels.hpp"
#include "dualnewton/models.hpp"

using namespace dualnewton;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::Serial : Exec::Parallel;
}

void BM_LogLinearStats(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SubsetIndex index = SubsetIndex::boltzmann(n);
  std::mt19937_64 rng(1);
  Vector theta(index.size());
  for (double& t : theta) t = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  for (auto _ : state) {
    auto s = kernels::loglinear_stats(n, index.masks(), theta, index.masks(),
                                      kernels::MomentOrder::ThirdCentral, exec_of(state));
    benchmark::DoNotOptimize(s.log_partition);
  }
}
BENCHMARK(BM_LogLinearStats)->ArgsProduct({{8, 12, 16}, {0, 1}})->ArgNames({"n", "par"});

const Vector kWeights{0.35, 0.4, 0.25};
const Vector kShapes{2, 5, 3, 2, 5, 3.5};

void BM_BetaMoments(benchmark::State& state) {
  const QuadratureRule rule = QuadratureRule::gauss_legendre(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto m = kernels::beta_mixture_moments({kWeights, kShapes}, rule.nodes, rule.weights,
                                           kernels::MomentOrder::ThirdCentral, exec_of(state));
    benchmark::DoNotOptimize(m.mass);
  }
}
BENCHMARK(BM_BetaMoments)->ArgsProduct({{32, 64, 128}, {0, 1}})->ArgNames({"nodes", "par"});

void BM_BetaNll(benchmark::State& state) {
  BetaMixtureModel model{kWeights, kShapes};
  const Vector points = beta_mixture_sample(model, static_cast<std::size_t>(state.range(0)), 42);
  for (auto _ : state) {
    auto v = kernels::beta_mixture_nll({kWeights, kShapes}, points, exec_of(state));
    benchmark::DoNotOptimize(v.nll);
  }
}
BENCHMARK(BM_BetaNll)->ArgsProduct({{1000, 5000, 50000}, {0, 1}})->ArgNames({"samples", "par"});

}  // namespace

BENCHMARK_MAIN();
