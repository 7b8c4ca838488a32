#include "selc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "selc/errors.hpp"
#include "selc/numeric.hpp"
#include "selc/text_format.hpp"

namespace selc {

namespace {

void check_inputs(std::span<const double> scores, std::span<const double> losses,
                  std::size_t min_size) {
  if (scores.size() != losses.size()) throw ShapeError("scores and losses differ in length");
  if (scores.size() < min_size) {
    if (min_size <= 1) throw ShapeError("at least one sample is required");
    throw SizeError("at least " + std::to_string(min_size) + " samples are required");
  }
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

RiskCoverageCurve rc_curve(std::span<const double> scores, std::span<const double> losses) {
  check_inputs(scores, losses, 1);
  const auto order = ascending_order(scores);
  const double n = static_cast<double>(scores.size());
  RiskCoverageCurve curve;
  curve.points.reserve(scores.size());
  CompensatedSum prefix;
  for (std::size_t i = 0; i < order.size(); ++i) {
    prefix += losses[order[i]];
    const double count = static_cast<double>(i + 1);
    curve.points.push_back({count / n, prefix.value() / count, scores[order[i]]});
  }
  return curve;
}

double aurc(std::span<const double> scores, std::span<const double> losses) {
  const auto curve = rc_curve(scores, losses);
  CompensatedSum acc;
  for (const auto& p : curve.points) acc += p.selective_risk;
  return acc.value() / static_cast<double>(curve.points.size());
}

double risk_at_coverage(const RiskCoverageCurve& curve, double target) {
  if (!(target > 0.0 && target <= 1.0)) throw DomainError("coverage target must lie in (0, 1]");
  if (curve.points.empty()) throw ShapeError("empty risk-coverage curve");
  const double slack = 1e-9 * target;
  for (const auto& p : curve.points) {
    if (p.coverage >= target - slack) return p.selective_risk;
  }
  return curve.points.back().selective_risk;
}

double sele_loss(std::span<const double> scores, std::span<const double> losses) {
  check_inputs(scores, losses, 2);
  const std::size_t n = scores.size();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    // #{j : s_j >= s_i}, the diagonal included.
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), scores[i]);
    const auto at_least = static_cast<double>(sorted.end() - first);
    acc += losses[i] * at_least;
  }
  const double nn = static_cast<double>(n);
  return acc.value() / (nn * nn);
}

double sele_proxy(std::span<const double> scores, std::span<const double> losses) {
  check_inputs(scores, losses, 2);
  const std::size_t n = scores.size();
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (losses[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += softplus(scores[j] - scores[i]);
    acc += losses[i] * row;
  }
  const double nn = static_cast<double>(n);
  return acc.value() / (nn * nn);
}

double sele_proxy_with_gradient(std::span<const double> scores, std::span<const double> losses,
                                std::span<double> grad) {
  check_inputs(scores, losses, 2);
  const std::size_t n = scores.size();
  if (grad.size() != n) throw ShapeError("gradient buffer has the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  CompensatedSum value;
  // d/ds_j of loss_i * softplus(s_j - s_i) is loss_i * sigma(s_j - s_i); the
  // same amount is subtracted from s_i.
  for (std::size_t i = 0; i < n; ++i) {
    const double li = losses[i];
    if (li == 0.0) continue;
    const double si = scores[i];
    double row = 0.0;
    double outflow = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto sp = softplus_with_slope(scores[j] - si);
      row += sp.value;
      const double g = li * sp.slope;
      grad[j] += g;
      outflow += g;
    }
    grad[i] -= outflow;
    value += li * row;
  }
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (auto& g : grad) g *= scale;
  return value.value() * scale;
}

std::vector<double> sele_proxy_gradient(std::span<const double> scores,
                                        std::span<const double> losses) {
  std::vector<double> grad(scores.size());
  sele_proxy_with_gradient(scores, losses, grad);
  return grad;
}

double harmonic_number(std::size_t n) {
  CompensatedSum acc;
  for (std::size_t k = 1; k <= n; ++k) acc += 1.0 / static_cast<double>(k);
  return acc.value();
}

void write_rc_curve_csv(std::ostream& out, const RiskCoverageCurve& curve) {
  out << "coverage,selective_risk,threshold\n";
  for (const auto& p : curve.points) {
    out << format_double(p.coverage) << ',' << format_double(p.selective_risk) << ','
        << format_double(p.threshold) << '\n';
  }
}

}  // namespace selc
