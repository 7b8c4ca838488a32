#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selc/errors.hpp"
#include "selc/metrics.hpp"
#include "test_support.hpp"

namespace selc {
namespace {

using V = std::vector<double>;

/// Direct O(n^2) definitions, independent of the library's sorted sweeps.
double naive_sele_loss(const V& s, const V& l) {
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[i] <= s[j]) acc += l[i];
  return acc / (n * n);
}

double naive_aurc(const V& s, const V& l) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });
  double prefix = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    prefix += l[order[i]];
    acc += prefix / static_cast<double>(i + 1);
  }
  return acc / static_cast<double>(s.size());
}

TEST(RcCurve, TwoPointExample) {
  const auto c = rc_curve(V{0.1, 0.9}, V{0, 100});
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].coverage, 0.5);
  EXPECT_EQ(c.points[0].selective_risk, 0.0);
  EXPECT_EQ(c.points[1].coverage, 1.0);
  EXPECT_EQ(c.points[1].selective_risk, 50.0);
  EXPECT_EQ(c.points[1].threshold, 0.9);
}

TEST(RcCurve, SinglePoint) {
  const auto c = rc_curve(V{3.0}, V{7.5});
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0].coverage, 1.0);
  EXPECT_EQ(c.points[0].selective_risk, 7.5);
}

TEST(RcCurve, TiesBrokenByInputPosition) {
  const auto c = rc_curve(V{0.5, 0.5}, V{100, 0});
  EXPECT_EQ(c.points[0].selective_risk, 100.0);
  EXPECT_EQ(c.points[1].selective_risk, 50.0);
}

TEST(RcCurve, EmptyOrMismatchedThrows) {
  EXPECT_THROW(rc_curve(V{}, V{}), ShapeError);
  EXPECT_THROW(rc_curve(V{1, 2}, V{1}), ShapeError);
}

TEST(RcCurve, LastPointIsMeanLoss) {
  Rng rng(9);
  V s(37), l(37);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.normal();
    l[i] = rng.uniform(0, 10);
  }
  const auto c = rc_curve(s, l);
  const double mean = std::accumulate(l.begin(), l.end(), 0.0) / 37.0;
  EXPECT_NEAR(c.points.back().selective_risk, mean, 1e-12);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GT(c.points[i].coverage, c.points[i - 1].coverage);
  }
}

TEST(RcCurve, CsvExport) {
  std::ostringstream out;
  write_rc_curve_csv(out, rc_curve(V{0.1, 0.9}, V{0, 100}));
  EXPECT_EQ(out.str(), "coverage,selective_risk,threshold\n0.5,0,0.1\n1,50,0.9\n");
}

TEST(Aurc, Examples) {
  EXPECT_DOUBLE_EQ(aurc(V{0.1, 0.9}, V{0, 1}), 0.25);
  EXPECT_EQ(aurc(V{0.3, 0.1, 0.2}, V{0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(aurc(V{0.9, 0.1}, V{0, 1}), 0.75);
}

TEST(Aurc, MatchesNaiveDefinition) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(1 + rng.below(60));
    V s(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8));  // plenty of ties
      l[i] = rng.uniform(0, 3);
    }
    EXPECT_NEAR(aurc(s, l), naive_aurc(s, l), 1e-12);
  }
}

TEST(Aurc, InvariantUnderMonotoneTransform) {
  Rng rng(12);
  V s(40), l(40), t(40);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.normal();
    l[i] = rng.uniform(0, 1);
    t[i] = std::exp(3.0 * s[i]) - 7.0;
  }
  EXPECT_EQ(aurc(s, l), aurc(t, l));
}

TEST(Aurc, LossOrderingIsOptimal) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    V l(15), s(15);
    for (auto& v : l) v = rng.uniform(0, 5);
    const double best = aurc(l, l);
    for (auto& v : s) v = rng.normal();
    EXPECT_LE(best, aurc(s, l) + 1e-12);
  }
}

TEST(RiskAtCoverage, Examples) {
  const auto c = rc_curve(V{0.1, 0.9}, V{0, 100});
  EXPECT_EQ(risk_at_coverage(c, 1.0), 50.0);
  EXPECT_EQ(risk_at_coverage(c, 0.9), 50.0);
  EXPECT_EQ(risk_at_coverage(c, 0.5), 0.0);
}

TEST(RiskAtCoverage, ExactFractionCountsAsReached) {
  V s(10), l(10, 0.0);
  std::iota(s.begin(), s.end(), 0.0);
  l[9] = 10.0;
  EXPECT_EQ(risk_at_coverage(rc_curve(s, l), 0.9), 0.0);
}

TEST(RiskAtCoverage, TargetOutsideRangeThrows) {
  const auto c = rc_curve(V{0.1}, V{1});
  EXPECT_THROW(risk_at_coverage(c, 0.0), DomainError);
  EXPECT_THROW(risk_at_coverage(c, 1.5), DomainError);
}

TEST(SeleLoss, Examples) {
  EXPECT_DOUBLE_EQ(sele_loss(V{0.1, 0.9}, V{0, 1}), 0.25);
  EXPECT_EQ(sele_loss(V{0.1, 0.9}, V{0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(sele_loss(V{0.4, 0.4}, V{1, 1}), 1.0);
}

TEST(SeleLoss, NeedsTwoSamples) {
  EXPECT_THROW(sele_loss(V{1}, V{1}), SizeError);
  EXPECT_THROW(sele_proxy(V{1}, V{1}), SizeError);
  EXPECT_THROW(sele_proxy_gradient(V{1}, V{1}), SizeError);
}

TEST(SeleLoss, MatchesNaiveDefinition) {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(60));
    V s(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6));
      l[i] = rng.uniform(0, 2);
    }
    EXPECT_NEAR(sele_loss(s, l), naive_sele_loss(s, l), 1e-12);
  }
}

TEST(SeleProxy, Examples) {
  EXPECT_NEAR(sele_proxy(V{0, 0}, V{0, 1}), std::log(2.0) / 2.0, 1e-15);
  EXPECT_EQ(sele_proxy(V{0.3, -2}, V{0, 0}), 0.0);
  const double expected = (std::log1p(std::exp(100.0)) + std::log(2.0)) / 4.0;
  EXPECT_NEAR(sele_proxy(V{-50, 50}, V{1, 0}), expected, 1e-12);
  EXPECT_NEAR(expected, 25.173, 1e-3);
}

TEST(SeleProxy, NoOverflowForHugeScores) {
  const double v = sele_proxy(V{-1e6, 1e6}, V{1, 1});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, (2e6 + 2.0 * std::log(2.0)) / 4.0, 1e-6);
}

TEST(SeleProxyGradient, Examples) {
  const auto sym = sele_proxy_gradient(V{0.7, 0.7}, V{2, 2});
  EXPECT_NEAR(sym[0], 0.0, 1e-15);
  EXPECT_NEAR(sym[1], 0.0, 1e-15);
  const auto g = sele_proxy_gradient(V{0, 0}, V{0, 1});
  EXPECT_NEAR(g[0], 0.125, 1e-15);
  EXPECT_NEAR(g[1], -0.125, 1e-15);
}

TEST(SeleProxyGradient, MatchesFiniteDifferences) {
  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(30));
    V s(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.normal();
      l[i] = rng.uniform(0, 4);
    }
    const FunctionOracle oracle(n, [&](std::span<const double> x, std::span<double>) {
      return sele_proxy(x, l);
    });
    const auto fd = testing::finite_difference(oracle, s);
    EXPECT_LE(testing::relative_error(sele_proxy_gradient(s, l), fd), 1e-6);
  }
}

TEST(SeleProxyGradient, CombinedPassAgrees) {
  const V s{0.3, -1.2, 0.8, 0.0};
  const V l{1, 0, 2, 5};
  V g(4);
  EXPECT_NEAR(sele_proxy_with_gradient(s, l, g), sele_proxy(s, l), 1e-14);
  const auto ref = sele_proxy_gradient(s, l);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g[i], ref[i], 1e-14);
}

TEST(Sandwich, DistinctScoresLowerBound) {
  Rng rng(16);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(100));
    V l(n);
    for (auto& v : l) v = rng.uniform(0, 10);
    const auto perm = rng.permutation(n);
    V s(perm.begin(), perm.end());
    EXPECT_LE(sele_loss(s, l), aurc(s, l) * (1 + 1e-12));
  }
}

TEST(Sandwich, UpperBoundWhenLossFollowsScore) {
  // Losses non-decreasing along the score order: aurc <= 2n/(n+1) sele.
  Rng rng(18);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(100));
    V l(n);
    for (auto& v : l) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 10);
    std::sort(l.begin(), l.end());
    V s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(i);
    const double bound = 2.0 * static_cast<double>(n) / static_cast<double>(n + 1);
    EXPECT_LE(aurc(s, l), bound * sele_loss(s, l) * (1 + 1e-12));
  }
}

TEST(Sandwich, HarmonicUpperBoundForAnyOrder) {
  // Per sample k in score order the weight ratio is n (H_n - H_{k-1}) / (n - k + 1) <= H_n.
  Rng rng(19);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(100));
    V l(n);
    for (auto& v : l) v = rng.uniform(0, 10);
    const auto perm = rng.permutation(n);
    V s(perm.begin(), perm.end());
    EXPECT_LE(aurc(s, l), harmonic_number(n) * sele_loss(s, l) * (1 + 1e-12));
  }
}

TEST(Sandwich, FactorTwoFailsWhenOrderDisagrees) {
  // The only lossy sample is the most confident one: aurc = H_4 / 4, sele = 1/4.
  const V s{1, 2, 3, 4};
  const V l{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(aurc(s, l), 25.0 / 48.0);
  EXPECT_DOUBLE_EQ(sele_loss(s, l), 0.25);
  EXPECT_GT(aurc(s, l), 2.0 * sele_loss(s, l));
}

TEST(Sandwich, TiedScoresHarmonicUpperBound) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(2 + rng.below(100));
    V s(n), l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(4));
      l[i] = rng.uniform(0, 10);
    }
    EXPECT_LE(aurc(s, l), harmonic_number(n) * sele_loss(s, l) * (1 + 1e-12));
  }
}

TEST(Harmonic, SmallValues) {
  EXPECT_EQ(harmonic_number(0), 0.0);
  EXPECT_EQ(harmonic_number(1), 1.0);
  EXPECT_DOUBLE_EQ(harmonic_number(3), 11.0 / 6.0);
}

TEST(Harmonic, TailSumLemma) {
  // sum_{i=1..n} (H_n - H_{i-1}) = n
  for (std::size_t n = 1; n <= 1000; ++n) {
    const double hn = harmonic_number(n);
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) acc += hn - harmonic_number(i - 1);
    ASSERT_NEAR(acc, static_cast<double>(n), 1e-9 * static_cast<double>(n)) << "n=" << n;
  }
}

}  // namespace
}  // namespace selc
