#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace selc {

/// Convex empirical risk R(theta) with a subgradient oracle.
///
/// Implementations must be reentrant: evaluate() may be called from
/// several threads at once on distinct buffers.
class RiskOracle {
 public:
  virtual ~RiskOracle() = default;

  virtual std::size_t dim() const = 0;

  /// Returns R(theta) and writes a subgradient into `grad` (size dim()).
  virtual double evaluate(std::span<const double> theta, std::span<double> grad) const = 0;
};

/// Adapts a callable `double(std::span<const double>, std::span<double>)`.
class FunctionOracle final : public RiskOracle {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<double>)>;

  FunctionOracle(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const override { return dim_; }
  double evaluate(std::span<const double> theta, std::span<double> grad) const override {
    return fn_(theta, grad);
  }

 private:
  std::size_t dim_;
  Fn fn_;
};

struct BmrmTraceRecord {
  std::size_t iteration;
  double primal;
  double dual;
  double relative_gap;
};

struct BmrmOptions {
  double gap_tol = 0.01;
  std::size_t max_iters = 2000;
  std::size_t max_cuts = 200;
  /// Inner QP (dual over the cut simplex).
  std::size_t qp_max_iters = 1000;
  double qp_tol = 1e-10;
  /// Optional per-iteration diagnostics.
  std::function<void(const BmrmTraceRecord&)> trace;
};

/// Regularization used in place of C = 0, where cutting planes alone are
/// unbounded.
inline constexpr double kBmrmMinReg = 1e-8;

struct SolveReport {
  std::vector<double> theta;
  double primal = 0.0;            // best F(theta) seen
  double dual_lower_bound = 0.0;  // best cutting-plane lower bound
  double relative_gap = 0.0;      // (primal - dual) / max(primal, tiny)
  std::size_t iterations = 0;
  bool converged = false;         // false when max_iters ran out
};

/// Bundle method for regularized risk minimization of
/// F(theta) = (C/2)||theta||^2 + R(theta), starting from theta = 0.
/// Throws NumericError when the oracle returns non-finite values.
SolveReport bmrm_solve(const RiskOracle& oracle, double reg_const, const BmrmOptions& options = {});

/// argmin (C/2)||theta||^2 + (1/n) sum_i (t_i - <theta, phi_i>)^2 where the
/// rows of `design` are phi_i. C = 0 returns the minimum-norm least-squares
/// solution. Throws NumericError on non-finite input.
Eigen::VectorXd ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const Eigen::Ref<const Eigen::VectorXd>& targets, double reg_const);

}  // namespace selc
