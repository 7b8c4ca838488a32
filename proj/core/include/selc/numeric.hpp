#pragma once

#include <cmath>
#include <span>

namespace selc {

/// Neumaier-compensated accumulator. Used wherever probability masses or
/// risks are summed and compared against 1e-12 tolerances.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double initial) : sum_(initial) {}

  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) noexcept {
  return std::fmax(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

/// 1 / (1 + exp(-t)), the derivative of softplus.
inline double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// softplus(t) and sigmoid(t) sharing one exponential.
struct SoftplusPair {
  double value;
  double slope;
};

inline SoftplusPair softplus_with_slope(double t) noexcept {
  const double e = std::exp(-std::fabs(t));
  const double inv = 1.0 / (1.0 + e);
  return {std::fmax(t, 0.0) + std::log1p(e), t >= 0.0 ? inv : e * inv};
}

}  // namespace selc
