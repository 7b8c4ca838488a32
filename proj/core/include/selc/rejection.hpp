#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace selc {

/// A point mass of the conditional risk r(x): value `risk` carries
/// probability `mass`.
struct RiskAtom {
  double risk;
  double mass;
};

/// Discrete distribution of the conditional risk. Atoms are sorted by risk
/// and equal risks are merged, so every atom value is distinct.
class DiscreteRiskDistribution {
 public:
  /// Validates (masses > 0 and summing to 1 within 1e-12, risks finite and
  /// nonnegative), then sorts and merges. Throws DomainError.
  explicit DiscreteRiskDistribution(std::vector<RiskAtom> atoms);

  std::span<const RiskAtom> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// E[r] over the whole distribution.
  double mean_risk() const;

 private:
  std::vector<RiskAtom> atoms_;
};

/// Randomized Bayes selection function on the risk axis: accept when
/// r < threshold, accept with probability `accept_prob` when r == threshold,
/// reject otherwise. threshold = +inf accepts everything.
struct RandomizedSelector {
  double threshold = std::numeric_limits<double>::infinity();
  double accept_prob = 1.0;

  double acceptance(double risk) const noexcept {
    if (risk < threshold) return 1.0;
    if (risk == threshold) return accept_prob;
    return 0.0;
  }
};

struct SelectorEvaluation {
  double coverage = 0.0;
  std::optional<double> selective_risk;  // empty when coverage == 0
  std::optional<double> expected_cost;   // present when a reject cost was given

  /// Throws UndefinedRiskError when nothing is accepted.
  double risk() const;
};

SelectorEvaluation evaluate_selector(const DiscreteRiskDistribution& dist,
                                     const RandomizedSelector& selector,
                                     std::optional<double> reject_cost = std::nullopt);

/// Evaluation of an arbitrary per-atom acceptance vector (aligned with
/// dist.atoms()). Used by the oracle; exposed for tests.
SelectorEvaluation evaluate_acceptance(const DiscreteRiskDistribution& dist,
                                       std::span<const double> acceptance,
                                       std::optional<double> reject_cost = std::nullopt);

/// Cost-based model: threshold at the reject cost. Ties are accepted
/// (accept_prob = 1); any value in [0, 1] is optimal there.
RandomizedSelector solve_cost_based(const DiscreteRiskDistribution& dist, double reject_cost);

enum class SolveStatus {
  Ok,
  /// Target risk below every atom: only the reject-all selector satisfies it.
  InfeasibleTarget,
};

struct ImprovementSolution {
  RandomizedSelector selector;
  SolveStatus status = SolveStatus::Ok;
  /// Offset b such that threshold = b + target; +inf means accept all.
  double offset = 0.0;
};

/// Bounded-improvement model: maximal coverage subject to selective risk
/// <= target_risk. Throws DomainError unless target_risk > 0.
ImprovementSolution solve_bounded_improvement(const DiscreteRiskDistribution& dist,
                                              double target_risk);

/// Bounded-coverage model: minimal selective risk subject to coverage >=
/// target_coverage, which must lie in (0, 1].
RandomizedSelector solve_bounded_coverage(const DiscreteRiskDistribution& dist,
                                          double target_coverage);

struct CostBasedModel {
  double reject_cost;
};
struct BoundedImprovementModel {
  double target_risk;
};
struct BoundedCoverageModel {
  double target_coverage;
};
using RejectionModel = std::variant<CostBasedModel, BoundedImprovementModel, BoundedCoverageModel>;

inline constexpr std::size_t kBruteForceMaxAtoms = 30;
/// Subset enumeration is exponential; it is only run up to this many atoms.
inline constexpr std::size_t kBruteForceSubsetAtoms = 12;

/// Exhaustive oracle, independent of the closed-form solvers above.
///
/// Candidates:
///  * threshold selectors: t over atom values and +-inf, boundary fraction q
///    over {0, 0.01, ..., 1} plus the fraction that makes the model's
///    constraint tight at that t;
///  * for <= kBruteForceSubsetAtoms atoms, every accept/reject subset with at
///    most one fractionally accepted atom (fraction from the same set).
///
/// Returns the best feasible evaluation under the model. Throws SizeError
/// above kBruteForceMaxAtoms atoms.
SelectorEvaluation brute_force_selector(const DiscreteRiskDistribution& dist,
                                        const RejectionModel& model);

/// Score-grouped empirical estimate of the risk distribution: each distinct
/// score value becomes a group with mass count/n and risk equal to the mean
/// loss of its samples.
struct ScoreGroup {
  double score;
  double risk;
  double mass;
  std::size_t count;
};

struct EmpiricalRiskDistribution {
  std::vector<ScoreGroup> groups;  // ascending by score
  DiscreteRiskDistribution distribution;
};

EmpiricalRiskDistribution empirical_risk_distribution(std::span<const double> scores,
                                                      std::span<const double> losses);

}  // namespace selc
