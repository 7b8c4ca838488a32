#include "selc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selc/errors.hpp"
#include "selc/numeric.hpp"

namespace selc {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Cutting-plane model max_i (<a_i, theta> + b_i) together with the dual
/// weights alpha on the simplex and the Gram matrix of the slopes.
class Bundle {
 public:
  Bundle(std::size_t dim, double reg) : dim_(dim), reg_(reg) {}

  std::size_t size() const { return offsets_.size(); }

  void add(std::vector<double> slope, double offset) {
    std::vector<double> row(size() + 1);
    for (std::size_t i = 0; i < size(); ++i) {
      row[i] = dot(slopes_[i], slope);
      gram_[i].push_back(row[i]);
    }
    row[size()] = dot(slope, slope);
    gram_.push_back(std::move(row));
    slopes_.push_back(std::move(slope));
    offsets_.push_back(offset);
    alpha_.push_back(size() == 1 ? 1.0 : 0.0);
  }

  /// Drops the oldest inactive cut; when every cut carries weight, folds
  /// the bundle into its alpha-weighted aggregate, which keeps the current
  /// dual value (and hence the lower bound) unchanged.
  void shrink() {
    for (std::size_t i = 0; i < size(); ++i) {
      if (alpha_[i] == 0.0) {
        erase(i);
        return;
      }
    }
    std::vector<double> slope(dim_, 0.0);
    double offset = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) slope[k] += alpha_[i] * slopes_[i][k];
      offset += alpha_[i] * offsets_[i];
    }
    slopes_.clear();
    offsets_.clear();
    alpha_.clear();
    gram_.clear();
    add(std::move(slope), offset);
  }

  /// Pairwise coordinate ascent on
  ///   max_alpha  <b, alpha> - (1/2C) alpha' G alpha   s.t. alpha in simplex,
  /// warm-started from the previous weights.
  void solve_dual(std::size_t max_iters, double tol) {
    const std::size_t k = size();
    std::vector<double> grad(k);
    for (std::size_t i = 0; i < k; ++i) {
      double g_alpha = 0.0;
      for (std::size_t j = 0; j < k; ++j) g_alpha += gram_[i][j] * alpha_[j];
      grad[i] = offsets_[i] - g_alpha / reg_;
    }
    for (std::size_t it = 0; it < max_iters; ++it) {
      std::size_t up = 0;
      std::size_t down = k;
      double weighted = 0.0;
      double objective = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (grad[i] > grad[up]) up = i;
        if (alpha_[i] > 0.0 && (down == k || grad[i] < grad[down])) down = i;
        weighted += alpha_[i] * grad[i];
        // grad = b - G alpha / C, so <alpha, b + grad> / 2 is the dual objective.
        objective += 0.5 * alpha_[i] * (offsets_[i] + grad[i]);
      }
      if (down == k) break;
      // Frank-Wolfe gap bounds the distance to the optimum; stop relative
      // to the objective so tiny C (huge 1/C scaling) still terminates.
      if (grad[up] - weighted <= tol * std::max(1.0, std::fabs(objective))) break;
      const double curvature = (gram_[up][up] + gram_[down][down] - 2.0 * gram_[up][down]) / reg_;
      double step = alpha_[down];
      if (curvature > 0.0) step = std::min(step, (grad[up] - grad[down]) / curvature);
      if (step <= 0.0) break;
      alpha_[up] += step;
      alpha_[down] -= step;
      if (alpha_[down] < 0.0) alpha_[down] = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        grad[i] -= step * (gram_[i][up] - gram_[i][down]) / reg_;
      }
    }
  }

  /// Writes theta = -(1/C) sum alpha_i a_i and returns the dual objective.
  double primal_point(std::vector<double>& theta) const {
    std::fill(theta.begin(), theta.end(), 0.0);
    CompensatedSum lin;
    for (std::size_t i = 0; i < size(); ++i) {
      if (alpha_[i] == 0.0) continue;
      for (std::size_t j = 0; j < dim_; ++j) theta[j] += alpha_[i] * slopes_[i][j];
      lin += alpha_[i] * offsets_[i];
    }
    const double sq = dot(theta, theta);
    for (auto& v : theta) v = -v / reg_;
    return lin.value() - 0.5 * sq / reg_;
  }

 private:
  void erase(std::size_t i) {
    const auto at = static_cast<std::ptrdiff_t>(i);
    slopes_.erase(slopes_.begin() + at);
    offsets_.erase(offsets_.begin() + at);
    alpha_.erase(alpha_.begin() + at);
    gram_.erase(gram_.begin() + at);
    for (auto& row : gram_) row.erase(row.begin() + at);
  }

  std::size_t dim_;
  double reg_;
  std::vector<std::vector<double>> slopes_;
  std::vector<double> offsets_;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> gram_;
};

}  // namespace

SolveReport bmrm_solve(const RiskOracle& oracle, double reg_const, const BmrmOptions& options) {
  if (!(reg_const >= 0.0) || !std::isfinite(reg_const)) {
    throw DomainError("regularization constant must be finite and nonnegative");
  }
  if (!(options.gap_tol > 0.0)) throw DomainError("gap tolerance must be positive");
  const double reg = std::max(reg_const, kBmrmMinReg);
  const std::size_t m = oracle.dim();

  std::vector<double> theta(m, 0.0);
  std::vector<double> grad(m);
  Bundle bundle(m, reg);

  SolveReport report;
  report.theta = theta;
  report.primal = std::numeric_limits<double>::infinity();
  report.dual_lower_bound = -std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double risk = oracle.evaluate(theta, grad);
    if (!std::isfinite(risk) || !std::all_of(grad.begin(), grad.end(),
                                             [](double g) { return std::isfinite(g); })) {
      throw NumericError("risk oracle returned a non-finite value at iteration " +
                         std::to_string(it));
    }
    const double primal = 0.5 * reg * dot(theta, theta) + risk;
    if (primal < report.primal) {
      report.primal = primal;
      report.theta = theta;
    }

    bundle.add(grad, risk - dot(grad, theta));
    if (bundle.size() > options.max_cuts) bundle.shrink();
    bundle.solve_dual(options.qp_max_iters, options.qp_tol);
    const double dual = bundle.primal_point(theta);
    report.dual_lower_bound = std::max(report.dual_lower_bound, dual);

    report.iterations = it;
    report.relative_gap = (report.primal - report.dual_lower_bound) /
                          std::max(std::fabs(report.primal), 1e-12);
    if (options.trace) {
      options.trace({it, report.primal, report.dual_lower_bound, report.relative_gap});
    }
    if (report.relative_gap <= options.gap_tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

Eigen::VectorXd ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& design,
                            const Eigen::Ref<const Eigen::VectorXd>& targets, double reg_const) {
  const auto n = design.rows();
  const auto m = design.cols();
  if (n < 1 || m < 1) throw ShapeError("ridge design must be at least 1x1");
  if (targets.size() != n) throw ShapeError("ridge targets must have one entry per design row");
  if (!std::isfinite(reg_const) || reg_const < 0.0) {
    throw NumericError("regularization constant must be finite and nonnegative");
  }
  if (!design.allFinite() || !targets.allFinite()) throw NumericError("non-finite ridge input");

  if (reg_const == 0.0) {
    // Minimum-norm least squares, also for rank-deficient designs.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    return cod.solve(targets);
  }
  const double scale = 2.0 / static_cast<double>(n);
  Eigen::MatrixXd normal = scale * (design.transpose() * design);
  normal.diagonal().array() += reg_const;
  const Eigen::VectorXd rhs = scale * (design.transpose() * targets);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericError("ridge normal system factorization failed");
  Eigen::VectorXd theta = ldlt.solve(rhs);
  if (!theta.allFinite()) throw NumericError("ridge solution is not finite");
  return theta;
}

}  // namespace selc
