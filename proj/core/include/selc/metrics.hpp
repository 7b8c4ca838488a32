#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace selc {

struct RiskCoveragePoint {
  double coverage;        // i / n
  double selective_risk;  // mean loss of the i least uncertain samples
  double threshold;       // score of the i-th sample in the ordering
};

/// Empirical risk-coverage curve: samples ordered by ascending uncertainty
/// score, ties broken by input position.
struct RiskCoverageCurve {
  std::vector<RiskCoveragePoint> points;
};

RiskCoverageCurve rc_curve(std::span<const double> scores, std::span<const double> losses);

/// Mean of the curve's selective risks, (1/n) sum_i L(i)/i.
double aurc(std::span<const double> scores, std::span<const double> losses);

/// Selective risk at the smallest coverage >= target. Coverage i/n is
/// compared against the target with a 1e-9 relative slack so that, e.g.,
/// 9/10 counts as reaching 0.9.
double risk_at_coverage(const RiskCoverageCurve& curve, double target);

/// (1/n^2) sum_i sum_j loss_i [s_i <= s_j], evaluated in O(n log n).
double sele_loss(std::span<const double> scores, std::span<const double> losses);

/// (1/n^2) sum_i sum_j loss_i log(1 + exp(s_j - s_i)).
double sele_proxy(std::span<const double> scores, std::span<const double> losses);

/// Gradient of sele_proxy with respect to the scores.
std::vector<double> sele_proxy_gradient(std::span<const double> scores,
                                        std::span<const double> losses);

/// Value and gradient in one O(n^2) pass; `grad` must have n entries and is
/// overwritten.
double sele_proxy_with_gradient(std::span<const double> scores, std::span<const double> losses,
                                std::span<double> grad);

/// H_n = sum_{k=1..n} 1/k, H_0 = 0.
double harmonic_number(std::size_t n);

/// CSV with header `coverage,selective_risk,threshold`, one row per point,
/// shortest round-trip decimals.
void write_rc_curve_csv(std::ostream& out, const RiskCoverageCurve& curve);

}  // namespace selc
