#include <benchmark/benchmark.h>

#include <vector>

#include "selc/core.hpp"
#include "selc/metrics.hpp"

namespace {

struct Sample {
  std::vector<double> scores;
  std::vector<double> losses;
};

Sample make_sample(std::size_t n) {
  selc::Rng rng(n);
  Sample s{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    s.scores[i] = rng.normal();
    s.losses[i] = rng.uniform() < 0.2 ? 100.0 : 0.0;
  }
  return s;
}

void BM_Aurc(benchmark::State& state) {
  const auto s = make_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(selc::aurc(s.scores, s.losses));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Aurc)->RangeMultiplier(4)->Range(256, 1 << 18)->Complexity(benchmark::oNLogN);

void BM_SeleLoss(benchmark::State& state) {
  const auto s = make_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(selc::sele_loss(s.scores, s.losses));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SeleLoss)->RangeMultiplier(4)->Range(256, 1 << 18)->Complexity(benchmark::oNLogN);

void BM_SeleProxyWithGradient(benchmark::State& state) {
  const auto s = make_sample(static_cast<std::size_t>(state.range(0)));
  std::vector<double> grad(s.scores.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(selc::sele_proxy_with_gradient(s.scores, s.losses, grad));
    benchmark::ClobberMemory();
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SeleProxyWithGradient)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared);

}  // namespace

BENCHMARK_MAIN();
