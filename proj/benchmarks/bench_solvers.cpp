#include <benchmark/benchmark.h>

#include <vector>

#include "selc/core.hpp"
#include "selc/models.hpp"
#include "selc/optimize.hpp"
#include "selc/rejection.hpp"
#include "selc/scores.hpp"

namespace {

selc::Dataset blobs(std::size_t n, std::size_t d, int labels, std::uint64_t seed) {
  selc::Rng rng(seed);
  std::vector<double> x(n * d);
  std::vector<selc::Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<selc::Label>(1 + i % static_cast<std::size_t>(labels));
    for (std::size_t j = 0; j < d; ++j) {
      x[i * d + j] = rng.normal() + (j == static_cast<std::size_t>(y[i] - 1) % d ? 2.0 : 0.0);
    }
  }
  return selc::Dataset(selc::FeatureMatrix::dense(n, d, std::move(x)), std::move(y), labels);
}

void BM_BmrmRidge(benchmark::State& state) {
  selc::Rng rng(3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(500, 20, [&] { return rng.normal(); });
  const Eigen::VectorXd t = Eigen::VectorXd::NullaryExpr(500, [&] { return rng.normal(); });
  const selc::FunctionOracle oracle(20, [&](std::span<const double> w, std::span<double> g) {
    const Eigen::Map<const Eigen::VectorXd> theta(w.data(), 20);
    const Eigen::VectorXd r = x * theta - t;
    Eigen::Map<Eigen::VectorXd>(g.data(), 20) = (2.0 / 500.0) * x.transpose() * r;
    return r.squaredNorm() / 500.0;
  });
  selc::BmrmOptions options;
  options.gap_tol = 1e-4;
  for (auto _ : state) benchmark::DoNotOptimize(selc::bmrm_solve(oracle, 1.0, options).primal);
}
BENCHMARK(BM_BmrmRidge)->Unit(benchmark::kMillisecond);

void BM_TrainClassifier(benchmark::State& state) {
  const auto kind = static_cast<selc::ModelKind>(state.range(0));
  const auto data = blobs(1000, 10, 4, 5);
  for (auto _ : state) benchmark::DoNotOptimize(selc::train_classifier(kind, data, 10.0).iterations);
}
BENCHMARK(BM_TrainClassifier)
    ->Arg(static_cast<int>(selc::ModelKind::LR))
    ->Arg(static_cast<int>(selc::ModelKind::MulticlassSVM))
    ->Arg(static_cast<int>(selc::ModelKind::SVOR))
    ->Unit(benchmark::kMillisecond);

void BM_SeleScore(benchmark::State& state) {
  const auto data = blobs(1000, 10, 4, 7);
  selc::Rng rng(8);
  std::vector<selc::Label> pred(data.size());
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    pred[i] = static_cast<selc::Label>(1 + rng.below(4));
    losses[i] = pred[i] == data.label(i) ? 0.0 : 100.0;
  }
  for (auto _ : state) {
    selc::Rng plan(9);
    benchmark::DoNotOptimize(
        selc::fit_sele_score(selc::ModelKind::MulticlassSVM, 4, data, pred, losses, 10.0, plan).iterations);
  }
}
BENCHMARK(BM_SeleScore)->Unit(benchmark::kMillisecond);

void BM_RejectionSolvers(benchmark::State& state) {
  selc::Rng rng(11);
  std::vector<selc::RiskAtom> atoms(static_cast<std::size_t>(state.range(0)));
  double total = 0.0;
  for (auto& a : atoms) {
    a.risk = rng.uniform();
    a.mass = 0.1 + rng.uniform();
    total += a.mass;
  }
  for (auto& a : atoms) a.mass /= total;
  const selc::DiscreteRiskDistribution dist(std::move(atoms));
  for (auto _ : state) {
    benchmark::DoNotOptimize(selc::solve_cost_based(dist, 0.3).threshold);
    benchmark::DoNotOptimize(selc::solve_bounded_improvement(dist, 0.3).selector.threshold);
    benchmark::DoNotOptimize(selc::solve_bounded_coverage(dist, 0.7).threshold);
  }
}
BENCHMARK(BM_RejectionSolvers)->Range(8, 1 << 14);

void BM_BruteForceOracle(benchmark::State& state) {
  selc::Rng rng(12);
  std::vector<selc::RiskAtom> atoms(static_cast<std::size_t>(state.range(0)));
  double total = 0.0;
  for (auto& a : atoms) {
    a.risk = rng.uniform();
    a.mass = 0.1 + rng.uniform();
    total += a.mass;
  }
  for (auto& a : atoms) a.mass /= total;
  const selc::DiscreteRiskDistribution dist(std::move(atoms));
  for (auto _ : state) {
    benchmark::DoNotOptimize(selc::brute_force_selector(dist, selc::BoundedCoverageModel{0.7}).coverage);
  }
}
BENCHMARK(BM_BruteForceOracle)->DenseRange(2, 10, 4);

}  // namespace
