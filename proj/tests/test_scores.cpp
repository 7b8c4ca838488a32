#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selc/errors.hpp"
#include "selc/metrics.hpp"
#include "selc/scores.hpp"
#include "test_support.hpp"

namespace selc {
namespace {

using testing::dense_dataset;

TrainedClassifier constant_classifier(std::size_t dim, int num_labels, Label always) {
  // Class `always` wins through its bias alone.
  TrainedClassifier m;
  m.kind = ModelKind::MulticlassSVM;
  m.num_labels = num_labels;
  m.scorer = LinearScorer(static_cast<std::size_t>(num_labels), dim,
                          static_cast<std::size_t>(num_labels));
  m.scorer.biases[static_cast<std::size_t>(always - 1)] = 1.0;
  return m;
}

TEST(ChunkCount, RoundsHalfToEven) {
  EXPECT_EQ(chunk_count(1), 1u);
  EXPECT_EQ(chunk_count(200), 1u);
  EXPECT_EQ(chunk_count(249), 1u);
  EXPECT_EQ(chunk_count(250), 1u);  // 0.5 -> 0 -> floor at 1
  EXPECT_EQ(chunk_count(750), 2u);  // 1.5 -> 2
  EXPECT_EQ(chunk_count(1000), 2u);
  EXPECT_EQ(chunk_count(1250), 2u);  // 2.5 -> 2
  EXPECT_EQ(chunk_count(1251), 3u);
  EXPECT_EQ(chunk_count(1750), 4u);  // 3.5 -> 4
}

TEST(ChunkPlan, PartitionWithBalancedSizes) {
  for (std::size_t n : {7u, 500u, 1333u, 2600u}) {
    Rng rng(61);
    const auto plan = make_chunk_plan(n, rng);
    EXPECT_EQ(plan.count(), chunk_count(n));
    std::vector<std::size_t> all;
    std::size_t lo = n, hi = 0;
    for (const auto& c : plan.chunks) {
      all.insert(all.end(), c.begin(), c.end());
      lo = std::min(lo, c.size());
      hi = std::max(hi, c.size());
    }
    EXPECT_LE(hi - lo, 1u);
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
  }
}

TEST(ChunkPlan, SameSeedSamePlan) {
  Rng a(62), b(62);
  EXPECT_EQ(make_chunk_plan(1800, a).chunks, make_chunk_plan(1800, b).chunks);
}

TEST(FeatureMap, PlacesRowInPredictedBlock) {
  const auto base = constant_classifier(1, 2, 2);
  const std::vector<double> x{3.0};
  const auto m = feature_map(base, RowView{{}, x});
  EXPECT_EQ(m.predicted, 2);
  EXPECT_EQ(m.indices, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(m.values, (std::vector<double>{3.0, 1.0}));
}

TEST(FeatureMap, BaseParametersRecoverMarginScore) {
  Rng rng(63);
  const auto data = testing::random_dataset(50, 3, 4, rng);
  TrainedClassifier base;
  base.kind = ModelKind::MulticlassSVM;
  base.num_labels = 4;
  base.scorer = LinearScorer(4, 3, 4);
  for (auto& w : base.scorer.weights) w = rng.normal();
  for (auto& b : base.scorer.biases) b = rng.normal();
  const auto theta = pack_score_parameters(base.scorer);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto m = feature_map(base, data.row(i));
    const auto act = activations(base, data.row(i));
    EXPECT_EQ(m.view().dot(theta), *std::max_element(act.begin(), act.end()));
    EXPECT_EQ(score_value(base.scorer, m.predicted, data.row(i)),
              -baseline_uncertainty(base, data.row(i)));
  }
}

TEST(FeatureMap, ConstantPredictionUsesOneBlock) {
  Rng rng(64);
  const auto data = testing::random_dataset(20, 3, 3, rng);
  const auto base = constant_classifier(3, 3, 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto m = feature_map(base, data.row(i));
    for (auto idx : m.indices) {
      EXPECT_GE(idx, 8u);
      EXPECT_LT(idx, 12u);
    }
  }
}

TEST(FeatureMap, DimensionMismatchThrows) {
  const auto base = constant_classifier(2, 2, 1);
  const std::vector<double> x{1.0};
  EXPECT_THROW(feature_map(base, RowView{{}, x}), ShapeError);
}

TEST(RegScore, ZeroLossesGiveZeroParameters) {
  Rng rng(65);
  const auto data = testing::random_dataset(30, 3, 2, rng);
  const std::vector<Label> pred(30, 1);
  const std::vector<double> losses(30, 0.0);
  for (double c : {0.0, 1.0}) {
    const auto s = fit_regression_score(ScoreKind::REG, ModelKind::LR, 2, data, pred, losses, c);
    for (double w : s.scorer.weights) EXPECT_EQ(w, 0.0);
    for (double b : s.scorer.biases) EXPECT_EQ(b, 0.0);
  }
}

TEST(RegScore, BiasOnlySingleSample) {
  const auto data = dense_dataset(1, 1, {0.0}, {1}, 1);
  const std::vector<Label> pred{1};
  const std::vector<double> loss{100.0};
  const auto s = fit_regression_score(ScoreKind::REG, ModelKind::LR, 1, data, pred, loss, 0.0);
  EXPECT_NEAR(s.scorer.biases[0], 100.0, 1e-10);
  EXPECT_NEAR(score_dataset(s, data, pred)[0], 100.0, 1e-10);
}

TEST(RegScore, RecoversConditionalRiskOfDiscreteDistribution) {
  // Three atoms x in {e1, e2, e3} with masses 0.2/0.3/0.5, represented by
  // 2/3/5 samples; per-atom losses average to r = 10, 40, 70.
  const std::vector<std::vector<double>> losses_per_atom{{0, 20}, {0, 60, 60}, {100, 100, 0, 100, 50}};
  std::vector<double> x;
  std::vector<double> losses;
  for (std::size_t a = 0; a < 3; ++a) {
    for (double l : losses_per_atom[a]) {
      for (std::size_t j = 0; j < 3; ++j) x.push_back(j == a ? 1.0 : 0.0);
      losses.push_back(l);
    }
  }
  const std::size_t n = losses.size();
  const auto data = dense_dataset(n, 3, x, std::vector<Label>(n, 1), 1);
  const std::vector<Label> pred(n, 1);
  const auto s = fit_regression_score(ScoreKind::REG, ModelKind::LR, 1, data, pred, losses, 0.0);
  const auto scores = score_dataset(s, data, pred);
  const std::vector<double> r{10, 40, 70};
  std::size_t i = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t k = 0; k < losses_per_atom[a].size(); ++k, ++i) {
      EXPECT_NEAR(scores[i], r[a], 1e-9);
    }
  }
}

TEST(RegScore, BlocksAreSolvedIndependently) {
  Rng rng(66);
  const auto data = testing::random_dataset(40, 2, 2, rng);
  std::vector<Label> pred(40);
  std::vector<double> losses(40);
  for (std::size_t i = 0; i < 40; ++i) {
    pred[i] = i % 2 == 0 ? 1 : 2;
    losses[i] = rng.uniform(0, 100);
  }
  const auto s = fit_regression_score(ScoreKind::REG, ModelKind::LR, 2, data, pred, losses, 0.0);
  // Block 1 must equal a plain least-squares fit on the even rows alone.
  std::vector<std::size_t> even;
  for (std::size_t i = 0; i < 40; i += 2) even.push_back(i);
  Eigen::MatrixXd design(20, 3);
  Eigen::VectorXd t(20);
  for (std::size_t r = 0; r < 20; ++r) {
    design(static_cast<Eigen::Index>(r), 0) = data.features().at(even[r], 0);
    design(static_cast<Eigen::Index>(r), 1) = data.features().at(even[r], 1);
    design(static_cast<Eigen::Index>(r), 2) = 1.0;
    t(static_cast<Eigen::Index>(r)) = losses[even[r]];
  }
  const Eigen::VectorXd ref = design.colPivHouseholderQr().solve(t);
  EXPECT_NEAR(s.scorer.weight_row(0)[0], ref(0), 1e-9);
  EXPECT_NEAR(s.scorer.weight_row(0)[1], ref(1), 1e-9);
  EXPECT_NEAR(s.scorer.biases[0], ref(2), 1e-9);
}

TEST(RegScore, InputChecks) {
  const auto data = dense_dataset(2, 1, {0.0, 1.0}, {1, 1}, 1);
  const std::vector<Label> bad{1, 3}, one{1};
  const std::vector<double> l{0, 1};
  EXPECT_THROW(fit_regression_score(ScoreKind::REG, ModelKind::LR, 2, data, bad, l, 0.0),
               DomainError);
  EXPECT_THROW(fit_regression_score(ScoreKind::REG, ModelKind::LR, 2, data, one, l, 0.0),
               ShapeError);
}

TEST(SeleScore, ZeroLossesGiveZeroParameters) {
  Rng rng(67);
  const auto data = testing::random_dataset(30, 2, 2, rng);
  const std::vector<Label> pred(30, 1);
  const std::vector<double> losses(30, 0.0);
  const auto s = fit_sele_score(ModelKind::LR, 2, data, pred, losses, 1.0, rng);
  for (double w : s.scorer.weights) EXPECT_EQ(w, 0.0);
  for (double b : s.scorer.biases) EXPECT_EQ(b, 0.0);
}

TEST(SeleScore, LossySampleScoresHigher) {
  const auto data = dense_dataset(2, 1, {-1.0, 1.0}, {1, 1}, 1);
  const std::vector<Label> pred{1, 1};
  const std::vector<double> losses{0.0, 1.0};
  Rng rng(68);
  const auto s = fit_sele_score(ModelKind::LR, 1, data, pred, losses, 1.0, rng);
  const auto scores = score_dataset(s, data, pred);
  EXPECT_GT(scores[1], scores[0]);
  // 1-D oracle: the proxy along w decreases from w = 0 toward the solution.
  const std::vector<double> at0{0.0, 0.0};
  const std::vector<double> atw{-s.scorer.weights[0], s.scorer.weights[0]};
  EXPECT_LT(sele_proxy(atw, losses), sele_proxy(at0, losses));
}

TEST(SeleScore, NeedsTwoSamples) {
  const auto data = dense_dataset(1, 1, {0.0}, {1}, 1);
  const std::vector<Label> pred{1};
  const std::vector<double> l{1.0};
  Rng rng(69);
  EXPECT_THROW(fit_sele_score(ModelKind::LR, 1, data, pred, l, 1.0, rng), SizeError);
}

TEST(SeleScore, OracleGradientMatchesFiniteDifferences) {
  Rng rng(70);
  const auto data = testing::random_dataset(80, 3, 3, rng);
  std::vector<Label> pred(80);
  std::vector<double> losses(80);
  for (std::size_t i = 0; i < 80; ++i) {
    pred[i] = static_cast<Label>(1 + rng.below(3));
    losses[i] = rng.uniform() < 0.3 ? 100.0 : 0.0;
  }
  Rng plan_rng(71);
  SeleRiskOracle oracle(data, pred, losses, 3, make_chunk_plan(80, plan_rng));
  for (int p = 0; p < 20; ++p) {
    std::vector<double> theta(oracle.dim());
    for (auto& v : theta) v = rng.normal();
    std::vector<double> g(oracle.dim());
    oracle.evaluate(theta, g);
    EXPECT_LE(testing::relative_error(g, testing::finite_difference(oracle, theta)), 1e-5);
  }
}

TEST(SeleScore, OracleAveragesChunks) {
  Rng rng(72);
  const auto data = testing::random_dataset(40, 2, 2, rng);
  const std::vector<Label> pred(40, 1);
  std::vector<double> losses(40);
  for (auto& l : losses) l = rng.uniform(0, 1);
  ChunkPlan plan;
  plan.chunks = {{}, {}};
  for (std::size_t i = 0; i < 40; ++i) plan.chunks[i % 2].push_back(i);
  SeleRiskOracle oracle(data, pred, losses, 2, plan);
  std::vector<double> theta(oracle.dim());
  for (auto& v : theta) v = rng.normal();
  std::vector<double> g(oracle.dim());
  const double value = oracle.evaluate(theta, g);
  double expected = 0.0;
  for (const auto& chunk : plan.chunks) {
    std::vector<double> s, l;
    for (auto i : chunk) {
      s.push_back(data.row(i).dot(std::span<const double>(theta).first(2)) + theta[2]);
      l.push_back(losses[i]);
    }
    expected += sele_proxy(s, l) / 2.0;
  }
  EXPECT_NEAR(value, expected, 1e-12);
}

TEST(SeleScore, OrderingMatchesMonotoneLoss) {
  // Loss strictly increasing in x1; x2 is irrelevant noise.
  Rng rng(73);
  const std::size_t n = 200;
  std::vector<double> x(n * 2), losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[2 * i] = rng.uniform(-2, 2);
    x[2 * i + 1] = rng.normal();
    losses[i] = 10.0 * (x[2 * i] + 2.0);
  }
  const auto data = dense_dataset(n, 2, x, std::vector<Label>(n, 1), 1);
  const std::vector<Label> pred(n, 1);
  const auto s = fit_sele_score(ModelKind::LR, 1, data, pred, losses, 1.0, rng);
  const auto scores = score_dataset(s, data, pred);
  EXPECT_GT(s.scorer.weights[0], 0.0);
  EXPECT_GT(testing::kendall_tau(scores, losses), 0.95);
}

TEST(TcpScore, RequiresLogisticBase) {
  Rng rng(74);
  const auto data = testing::random_dataset(10, 2, 2, rng);
  const auto svm = constant_classifier(2, 2, 1);
  EXPECT_THROW(train_tcp_score(svm, data, 1.0), ContractError);
}

TEST(TcpScore, ConstantTargetRegressesToConstant) {
  const auto data = dense_dataset(3, 1, {0.0, 0.0, 0.0}, {1, 1, 1}, 1);
  const std::vector<Label> pred{1, 1, 1};
  const std::vector<double> t{0.5, 0.5, 0.5};
  const auto s = fit_regression_score(ScoreKind::TCP, ModelKind::LR, 1, data, pred, t, 0.0);
  for (double v : score_dataset(s, data, pred)) EXPECT_NEAR(v, -0.5, 1e-12);
}

TEST(TcpScore, ConfidentBaseGivesMinusOne) {
  // A logistic base with huge margins: p(y_i | x_i) is 1 for every sample.
  const auto data = dense_dataset(4, 1, {-3.0, -2.0, 2.0, 3.0}, {1, 1, 2, 2}, 2);
  TrainedClassifier base;
  base.kind = ModelKind::LR;
  base.num_labels = 2;
  base.scorer = LinearScorer(2, 1, 2);
  base.scorer.weights = {-1000.0, 1000.0};
  const auto s = train_tcp_score(base, data, 0.0);
  for (double v : score_dataset(s, base, data)) EXPECT_NEAR(v, -1.0, 1e-9);
}

TEST(ScoreDataset, BaselineDelegatesToClassifier) {
  TrainedClassifier base;
  base.kind = ModelKind::LR;
  base.num_labels = 2;
  base.scorer = LinearScorer(2, 1, 2);
  base.scorer.weights = {std::log(0.7), std::log(0.3)};
  const auto data = dense_dataset(1, 1, {1.0}, {1}, 2);
  const auto s = make_baseline_score(base);
  EXPECT_NEAR(score_dataset(s, base, data)[0], 0.3, 1e-15);
  const std::vector<Label> pred{1};
  EXPECT_THROW(score_dataset(s, data, pred), ContractError);
}

TEST(ScoreDataset, ZeroParametersTieEverything) {
  Rng rng(75);
  const auto data = testing::random_dataset(10, 2, 2, rng);
  UncertaintyScore s;
  s.kind = ScoreKind::SELE;
  s.scorer = LinearScorer(2, 2, 2);
  const std::vector<Label> pred(10, 2);
  for (double v : score_dataset(s, data, pred)) EXPECT_EQ(v, 0.0);
}

TEST(ScoreDataset, TcpIsNegated) {
  UncertaintyScore s;
  s.kind = ScoreKind::TCP;
  s.scorer = LinearScorer(1, 1, 1);
  s.scorer.biases[0] = 0.9;
  const auto data = dense_dataset(1, 1, {0.0}, {1}, 1);
  const std::vector<Label> pred{1};
  EXPECT_DOUBLE_EQ(score_dataset(s, data, pred)[0], -0.9);
}

TEST(ScoreDataset, BaseKindMismatchThrows) {
  auto base = constant_classifier(1, 2, 1);
  UncertaintyScore s;
  s.kind = ScoreKind::REG;
  s.base_kind = ModelKind::LR;
  s.scorer = LinearScorer(2, 1, 2);
  const auto data = dense_dataset(1, 1, {0.0}, {1}, 2);
  EXPECT_THROW(score_dataset(s, base, data), ContractError);
}

TEST(ScoreKind, RoundTripsNames) {
  for (auto k : {ScoreKind::SELE, ScoreKind::REG, ScoreKind::TCP, ScoreKind::Baseline}) {
    EXPECT_EQ(parse_score_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_score_kind("MCP"), ConfigError);
}

}  // namespace
}  // namespace selc
