#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "selc/bench.hpp"
#include "selc/errors.hpp"
#include "test_support.hpp"

namespace selc {
namespace {

using Grid = std::vector<std::vector<double>>;

// Mean test AuRC from the paper's classification table, 11 datasets
// (AVILA ... SHUTTLE). Columns: MCP, SELE, REG, TCP on top of LR.
const Grid kLrTable{
    {27.18, 25.79, 26.62, 26.85}, {0.88, 0.65, 0.82, 0.78}, {16.49, 17.58, 17.62, 17.19},
    {1.26, 1.00, 1.16, 1.14},     {7.43, 6.42, 7.44, 6.71}, {2.60, 1.88, 1.97, 1.90},
    {0.69, 1.55, 1.97, 1.47},     {0.76, 0.75, 0.91, 0.85}, {3.83, 3.68, 4.93, 4.52},
    {2.03, 1.82, 2.69, 2.37},     {0.59, 0.26, 1.24, 0.58}};

// Columns: MARGIN, SELE, REG on top of SVM.
const Grid kSvmTable{{31.65, 25.26, 25.95}, {0.89, 0.65, 0.82}, {25.71, 17.79, 17.77},
                     {1.40, 1.01, 1.18},    {10.20, 6.05, 7.15}, {2.24, 1.97, 2.04},
                     {2.79, 1.57, 2.16},    {0.84, 0.72, 0.90},  {4.75, 3.82, 5.44},
                     {3.68, 1.56, 2.46},    {1.31, 0.24, 0.55}};

TEST(RankMethods, StrictOrder) {
  const auto r = rank_methods({{1, 2, 3}, {0.1, 0.5, 0.9}});
  EXPECT_EQ(r.average, (std::vector<double>{1, 2, 3}));
}

TEST(RankMethods, TiesShareMeanRank) {
  const auto r = rank_methods({{0.5, 0.5, 0.7}});
  EXPECT_EQ(r.per_dataset[0], (std::vector<double>{1.5, 1.5, 3}));
}

TEST(RankMethods, PaperLrAverageRanks) {
  const auto r = rank_methods(kLrTable);
  const std::vector<double> expected{2.73, 1.36, 3.55, 2.36};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.average[k], expected[k], 0.005);
}

TEST(RankMethods, PaperSvmAverageRanks) {
  const auto r = rank_methods(kSvmTable);
  const std::vector<double> expected{2.82, 1.09, 2.09};
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.average[k], expected[k], 0.005);
}

TEST(RankMethods, RowSumsAreTriangular) {
  Rng rng(101);
  Grid g(20, std::vector<double>(5));
  for (auto& row : g)
    for (auto& v : row) v = static_cast<double>(rng.below(4));
  for (const auto& row : rank_methods(g).per_dataset) {
    double s = 0.0;
    for (double v : row) s += v;
    EXPECT_DOUBLE_EQ(s, 15.0);
  }
}

TEST(RankMethods, IncompleteGrid) {
  EXPECT_THROW(rank_methods({{1, 2}, {1}}), IncompleteGridError);
  EXPECT_THROW(rank_methods({{1, std::numeric_limits<double>::quiet_NaN()}}), IncompleteGridError);
  EXPECT_THROW(rank_methods({}), IncompleteGridError);
}

TEST(Friedman, IdenticalRanks) {
  const auto f = friedman_test({{1.5, 1.5}, {1.5, 1.5}, {1.5, 1.5}}, 0.05);
  EXPECT_EQ(f.statistic, 0.0);
  EXPECT_FALSE(f.rejected);
}

TEST(Friedman, OneMethodAlwaysWins) {
  const Grid ranks(11, {1.0, 2.0});
  const auto f = friedman_test(ranks, 0.05);
  EXPECT_NEAR(f.statistic, 11.0, 1e-12);
  EXPECT_EQ(f.degrees_of_freedom, 1);
  EXPECT_EQ(f.critical_value, 3.841);
  EXPECT_TRUE(f.rejected);
}

TEST(Friedman, PaperComparisonsRejected) {
  for (const auto* table : {&kLrTable, &kSvmTable}) {
    const auto f = friedman_test(rank_methods(*table).per_dataset, 0.05);
    EXPECT_TRUE(f.rejected);
  }
}

TEST(Friedman, InvariantUnderMonotoneTransform) {
  Grid t = kLrTable;
  for (auto& row : t)
    for (auto& v : row) v = std::log(v) * 3.0 + 1.0;
  EXPECT_DOUBLE_EQ(friedman_test(rank_methods(t).per_dataset, 0.05).statistic,
                   friedman_test(rank_methods(kLrTable).per_dataset, 0.05).statistic);
}

TEST(Friedman, Preconditions) {
  EXPECT_THROW(friedman_test({{1, 2}}, 0.05), SizeError);
  EXPECT_THROW(friedman_test({{1}, {1}}, 0.05), SizeError);
  EXPECT_THROW(friedman_test({{1, 2}, {1, 2}}, 0.01), DomainError);
}

TEST(Nemenyi, PaperCriticalDifferenceForFourMethods) {
  EXPECT_NEAR(nemenyi_cd(4, 11, 0.10), 1.26, 0.01);
}

TEST(Nemenyi, ThreeMethodsUsesStandardTable) {
  // The paper quotes 0.98 here; the studentized-range table gives 0.875.
  EXPECT_NEAR(nemenyi_cd(3, 11, 0.10), 0.875, 0.001);
}

TEST(Nemenyi, VanishesWithManyDatasets) {
  EXPECT_LT(nemenyi_cd(4, 1000000, 0.05), 0.01);
  EXPECT_THROW(nemenyi_cd(11, 5, 0.05), DomainError);
  EXPECT_THROW(nemenyi_cd(3, 5, 0.2), DomainError);
}

TEST(RelativeImprovement, Examples) {
  EXPECT_EQ(relative_improvement(10, 5), 50.0);
  EXPECT_EQ(relative_improvement(10, 10), 0.0);
  EXPECT_NEAR(relative_improvement(31.65, 25.26), 20.19, 0.01);
  EXPECT_THROW(relative_improvement(0, 1), DomainError);
}

TEST(StreamSeed, DistinctAndStable) {
  EXPECT_EQ(stream_seed(1, 1, 0), stream_seed(1, 1, 0));
  EXPECT_NE(stream_seed(1, 1, 0), stream_seed(1, 1, 1));
  EXPECT_NE(stream_seed(1, 1, 0), stream_seed(1, 2, 0));
  EXPECT_NE(stream_seed(1, 1, 0), stream_seed(2, 1, 0));
}

TEST(Protocol, MethodNames) {
  EXPECT_EQ(method_name(ScoreKind::Baseline, ModelKind::LR), "MCP");
  EXPECT_EQ(method_name(ScoreKind::Baseline, ModelKind::MulticlassSVM), "MARGIN");
  EXPECT_EQ(method_name(ScoreKind::SELE, ModelKind::SVOR), "SELE");
  EXPECT_EQ(protocol_loss(ModelKind::SVOR, 5).kind, LossKind::MAE);
  EXPECT_EQ(protocol_loss(ModelKind::LR, 5).kind, LossKind::ZeroOneTimes100);
}

TEST(Protocol, ValidationRejectsBadConfigs) {
  ProtocolConfig c;
  c.base_kind = ModelKind::MulticlassSVM;
  c.methods = {ScoreKind::Baseline, ScoreKind::TCP};
  EXPECT_THROW(validate_protocol(c), ConfigError);
  c.methods = {ScoreKind::SELE, ScoreKind::SELE};
  EXPECT_THROW(validate_protocol(c), ConfigError);
  c.methods = {ScoreKind::SELE};
  c.score_grid = {};
  EXPECT_THROW(validate_protocol(c), ConfigError);
  c.score_grid = {-1};
  EXPECT_THROW(validate_protocol(c), ConfigError);
  c.score_grid = {1};
  c.replicates = 0;
  EXPECT_THROW(validate_protocol(c), ConfigError);
}

/// Two Gaussian classes; x2 controls label noise without moving the boundary.
Dataset noisy_pair(std::size_t n, double flip_scale, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n * 2);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    x[2 * i] = (pos ? 1.5 : -1.5) + 0.5 * rng.normal();
    x[2 * i + 1] = rng.uniform(-2, 2);
    const double flip = flip_scale / (1.0 + std::exp(-(3.0 * x[2 * i + 1] - 2.0)));
    y[i] = (pos != (rng.uniform() < flip)) ? 2 : 1;
  }
  return testing::dense_dataset(n, 2, x, y, 2);
}

ProtocolConfig fast_config(ModelKind base, std::vector<ScoreKind> methods) {
  ProtocolConfig c;
  c.base_kind = base;
  c.methods = std::move(methods);
  c.classifier_grid = {1, 10};
  c.score_grid = {1, 10};
  c.replicates = 2;
  c.seed = 7;
  return c;
}

TEST(Protocol, ZeroNoiseGivesZeroAurc) {
  const auto data = noisy_pair(200, 0.0, 1);
  const auto r = run_protocol({{"clean", data}},
                              fast_config(ModelKind::LR, {ScoreKind::Baseline, ScoreKind::SELE,
                                                          ScoreKind::REG, ScoreKind::TCP}));
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.aurc, 0.0) << row.method;
    EXPECT_EQ(row.r_at_100, 0.0);
  }
}

TEST(Protocol, GridIsCompleteAndBaseRiskShared) {
  const auto r = run_protocol({{"a", noisy_pair(200, 0.6, 2)}, {"b", noisy_pair(160, 0.4, 3)}},
                              fast_config(ModelKind::MulticlassSVM,
                                          {ScoreKind::Baseline, ScoreKind::SELE, ScoreKind::REG}));
  EXPECT_EQ(r.datasets, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(r.methods, (std::vector<std::string>{"MARGIN", "SELE", "REG"}));
  ASSERT_EQ(r.rows.size(), 2u * 2u * 3u);
  for (std::size_t i = 0; i < r.rows.size(); i += 3) {
    EXPECT_EQ(r.rows[i].r_at_100, r.rows[i + 1].r_at_100);
    EXPECT_EQ(r.rows[i].r_at_100, r.rows[i + 2].r_at_100);
    EXPECT_FALSE(r.rows[i].c_score.has_value());
    EXPECT_TRUE(r.rows[i + 1].c_score.has_value());
  }
  const auto ranks = rank_methods(r.mean_aurc_grid());
  double total = 0.0;
  for (double a : ranks.average) total += a;
  EXPECT_DOUBLE_EQ(total, 6.0);
  const auto cells = r.summarize();
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].count, 2u);
}

TEST(Protocol, LearnedScoreBeatsMarginOnStructuredNoise) {
  auto cfg = fast_config(ModelKind::MulticlassSVM, {ScoreKind::Baseline, ScoreKind::SELE});
  cfg.replicates = 3;
  const auto r = run_protocol({{"noisy", noisy_pair(600, 0.8, 4)}}, cfg);
  const auto grid = r.mean_aurc_grid();
  EXPECT_LT(grid[0][1], grid[0][0]);
}

TEST(Protocol, DeterministicAcrossThreadCounts) {
  auto cfg = fast_config(ModelKind::LR, {ScoreKind::Baseline, ScoreKind::SELE, ScoreKind::TCP});
  const std::vector<DatasetJob> jobs{{"a", noisy_pair(150, 0.5, 5)}, {"b", noisy_pair(150, 0.3, 6)}};
  std::ostringstream one, two, three;
  write_results_csv(one, run_protocol(jobs, cfg));
  write_results_csv(two, run_protocol(jobs, cfg));
  cfg.threads = 3;
  write_results_csv(three, run_protocol(jobs, cfg));
  EXPECT_EQ(one.str(), two.str());
  EXPECT_EQ(one.str(), three.str());
}

TEST(Protocol, SummaryOutputs) {
  auto cfg = fast_config(ModelKind::LR, {ScoreKind::Baseline, ScoreKind::REG});
  const auto r = run_protocol({{"a", noisy_pair(120, 0.5, 8)}, {"b", noisy_pair(120, 0.2, 9)}}, cfg);
  std::ostringstream csv, txt;
  write_results_csv(csv, r);
  EXPECT_EQ(csv.str().rfind("dataset,method,replicate,C_classifier,C_score,aurc,r_at_90,r_at_100\n", 0),
            0u);
  write_summary_text(txt, r);
  EXPECT_NE(txt.str().find("average rank"), std::string::npos);
  EXPECT_NE(txt.str().find("friedman statistic="), std::string::npos);
  SummaryOptions o;
  o.provenance = "selc test";
  const auto json = summary_json(r, o);
  EXPECT_EQ(json.rfind("{\n  \"provenance\": \"selc test\"", 0), 0u);
  EXPECT_NE(json.find("\"nemenyi_cd\""), std::string::npos);
}

}  // namespace
}  // namespace selc
