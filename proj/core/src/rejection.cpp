#include "selc/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "selc/errors.hpp"
#include "selc/numeric.hpp"

namespace selc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassTolerance = 1e-12;
// Lexicographic tie window used by the oracle when two candidates agree on
// the primary objective up to rounding.
constexpr double kTieWindow = 1e-13;

}  // namespace

// --- DiscreteRiskDistribution ----------------------------------------------

DiscreteRiskDistribution::DiscreteRiskDistribution(std::vector<RiskAtom> atoms) {
  if (atoms.empty()) throw DomainError("risk distribution needs at least one atom");
  CompensatedSum total;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.risk) || a.risk < 0.0) {
      throw DomainError("atom risk must be finite and nonnegative");
    }
    if (!std::isfinite(a.mass) || a.mass <= 0.0) throw DomainError("atom mass must be positive");
    total += a.mass;
  }
  if (std::fabs(total.value() - 1.0) > kMassTolerance) {
    throw DomainError("atom masses sum to " + std::to_string(total.value()) + ", expected 1");
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const RiskAtom& a, const RiskAtom& b) { return a.risk < b.risk; });
  for (const auto& a : atoms) {
    if (!atoms_.empty() && atoms_.back().risk == a.risk) {
      atoms_.back().mass += a.mass;
    } else {
      atoms_.push_back(a);
    }
  }
}

double DiscreteRiskDistribution::mean_risk() const {
  CompensatedSum acc;
  for (const auto& a : atoms_) acc += a.mass * a.risk;
  return acc.value();
}

// --- evaluation ------------------------------------------------------------

double SelectorEvaluation::risk() const {
  if (!selective_risk) throw UndefinedRiskError("selective risk undefined at zero coverage");
  return *selective_risk;
}

SelectorEvaluation evaluate_acceptance(const DiscreteRiskDistribution& dist,
                                       std::span<const double> acceptance,
                                       std::optional<double> reject_cost) {
  const auto atoms = dist.atoms();
  if (acceptance.size() != atoms.size()) throw ShapeError("one acceptance value per atom");
  CompensatedSum coverage;
  CompensatedSum accepted_risk;
  CompensatedSum cost;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double c = acceptance[k];
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("acceptance probability outside [0,1]");
    coverage += atoms[k].mass * c;
    accepted_risk += atoms[k].mass * atoms[k].risk * c;
    if (reject_cost) cost += atoms[k].mass * (atoms[k].risk * c + (1.0 - c) * *reject_cost);
  }
  SelectorEvaluation out;
  out.coverage = coverage.value();
  if (out.coverage > 0.0) out.selective_risk = accepted_risk.value() / out.coverage;
  if (reject_cost) out.expected_cost = cost.value();
  return out;
}

SelectorEvaluation evaluate_selector(const DiscreteRiskDistribution& dist,
                                     const RandomizedSelector& selector,
                                     std::optional<double> reject_cost) {
  if (!(selector.accept_prob >= 0.0 && selector.accept_prob <= 1.0)) {
    throw DomainError("accept_prob outside [0,1]");
  }
  std::vector<double> acceptance;
  acceptance.reserve(dist.size());
  for (const auto& a : dist.atoms()) acceptance.push_back(selector.acceptance(a.risk));
  return evaluate_acceptance(dist, acceptance, reject_cost);
}

// --- closed-form solvers -----------------------------------------------------

RandomizedSelector solve_cost_based(const DiscreteRiskDistribution&, double reject_cost) {
  if (!(reject_cost >= 0.0)) throw DomainError("reject cost must be nonnegative");
  return {reject_cost, 1.0};
}

ImprovementSolution solve_bounded_improvement(const DiscreteRiskDistribution& dist,
                                              double target_risk) {
  if (!(target_risk > 0.0) || !std::isfinite(target_risk)) {
    throw DomainError("target risk must be a positive finite number");
  }
  const auto atoms = dist.atoms();
  // rho(a) = sum over atoms with r - target <= a of p * (r - target). Along
  // the sorted atoms it first decreases then increases, so the supremum of
  // {a : rho(a) <= 0} is the excess risk of the first atom where it turns
  // positive.
  CompensatedSum rho;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double rho_below = rho.value();
    const double rho_at = atoms[k].mass * (atoms[k].risk - target_risk);
    rho += rho_at;
    if (rho.value() > 0.0) {
      ImprovementSolution sol;
      // threshold = b + target, which is exactly this atom's risk; use the
      // stored value so the equality test in the selector stays exact.
      sol.selector.threshold = atoms[k].risk;
      sol.selector.accept_prob = std::clamp(-rho_below / rho_at, 0.0, 1.0);
      sol.offset = atoms[k].risk - target_risk;
      sol.status = k == 0 ? SolveStatus::InfeasibleTarget : SolveStatus::Ok;
      return sol;
    }
  }
  ImprovementSolution sol;
  sol.selector = {kInf, 1.0};
  sol.offset = kInf;
  return sol;
}

RandomizedSelector solve_bounded_coverage(const DiscreteRiskDistribution& dist,
                                          double target_coverage) {
  // Coverages computed from atom masses may overshoot 1 by rounding.
  if (!(target_coverage > 0.0 && target_coverage <= 1.0 + kMassTolerance)) {
    throw DomainError("target coverage must lie in (0, 1]");
  }
  if (target_coverage >= 1.0) return {kInf, 1.0};
  const auto atoms = dist.atoms();
  // P[r < a] is left-continuous and jumps right after each atom, so the
  // infimum of {a : P[r < a] >= target} is the first atom whose cumulative
  // mass reaches the target.
  CompensatedSum mass;
  for (const auto& atom : atoms) {
    const double below = mass.value();
    mass += atom.mass;
    if (mass.value() >= target_coverage) {
      return {atom.risk, std::clamp((target_coverage - below) / atom.mass, 0.0, 1.0)};
    }
  }
  // Total mass fell short of the target by rounding only.
  return {kInf, 1.0};
}

// --- brute-force oracle ------------------------------------------------------

namespace {

struct Candidate {
  double coverage;
  double accepted_risk;  // sum of p * r * c
};

class OracleSearch {
 public:
  OracleSearch(const RejectionModel& model) : model_(model) {}

  void offer(const Candidate& c) {
    if (c.coverage < 0.0) return;
    SelectorEvaluation e;
    e.coverage = c.coverage;
    if (c.coverage > 0.0) e.selective_risk = c.accepted_risk / c.coverage;
    if (const auto* cost = std::get_if<CostBasedModel>(&model_)) {
      e.expected_cost = c.accepted_risk + (1.0 - c.coverage) * cost->reject_cost;
    }
    if (!feasible(e)) return;
    if (!best_ || better(e, *best_)) best_ = e;
  }

  const std::optional<SelectorEvaluation>& best() const { return best_; }

  /// Boundary fractions worth testing when the atoms strictly below the
  /// candidate boundary carry `mass_below` and `risk_below`.
  std::vector<double> tight_fractions(double mass_below, double risk_below,
                                      const RiskAtom& boundary) const {
    std::vector<double> out;
    if (const auto* m = std::get_if<BoundedCoverageModel>(&model_)) {
      out.push_back((m->target_coverage - mass_below) / boundary.mass);
    } else if (const auto* m = std::get_if<BoundedImprovementModel>(&model_)) {
      const double denom = boundary.mass * (boundary.risk - m->target_risk);
      if (denom != 0.0) out.push_back((m->target_risk * mass_below - risk_below) / denom);
    }
    std::erase_if(out, [](double q) { return !(q >= 0.0 && q <= 1.0); });
    return out;
  }

 private:
  bool feasible(const SelectorEvaluation& e) const {
    if (const auto* m = std::get_if<BoundedImprovementModel>(&model_)) {
      return e.coverage == 0.0 || *e.selective_risk <= m->target_risk + 1e-12;
    }
    if (const auto* m = std::get_if<BoundedCoverageModel>(&model_)) {
      return e.coverage >= m->target_coverage - 1e-12;
    }
    return true;
  }

  bool better(const SelectorEvaluation& a, const SelectorEvaluation& b) const {
    if (std::holds_alternative<CostBasedModel>(model_)) {
      if (*a.expected_cost < *b.expected_cost - kTieWindow) return true;
      return std::fabs(*a.expected_cost - *b.expected_cost) <= kTieWindow &&
             a.coverage > b.coverage;
    }
    if (std::holds_alternative<BoundedImprovementModel>(model_)) {
      if (a.coverage > b.coverage + kTieWindow) return true;
      if (std::fabs(a.coverage - b.coverage) > kTieWindow) return false;
      return a.selective_risk.value_or(0.0) < b.selective_risk.value_or(0.0);
    }
    // Bounded coverage: lowest risk, then the smallest sufficient coverage.
    const double ra = a.selective_risk.value_or(kInf);
    const double rb = b.selective_risk.value_or(kInf);
    if (ra < rb - kTieWindow) return true;
    return std::fabs(ra - rb) <= kTieWindow && a.coverage < b.coverage;
  }

  RejectionModel model_;
  std::optional<SelectorEvaluation> best_;
};

}  // namespace

SelectorEvaluation brute_force_selector(const DiscreteRiskDistribution& dist,
                                        const RejectionModel& model) {
  const auto atoms = dist.atoms();
  const std::size_t n = atoms.size();
  if (n > kBruteForceMaxAtoms) {
    throw SizeError("brute force oracle supports at most " + std::to_string(kBruteForceMaxAtoms) +
                    " atoms");
  }
  if (const auto* m = std::get_if<BoundedCoverageModel>(&model)) {
    if (!(m->target_coverage > 0.0 && m->target_coverage <= 1.0)) {
      throw DomainError("target coverage must lie in (0, 1]");
    }
  }
  if (const auto* m = std::get_if<BoundedImprovementModel>(&model)) {
    if (!(m->target_risk > 0.0)) throw DomainError("target risk must be positive");
  }

  OracleSearch search(model);

  // Threshold family. t = -inf accepts nothing, t = +inf everything; for
  // t at atom k, atoms strictly below are accepted and atom k partially.
  search.offer({0.0, 0.0});
  {
    CompensatedSum mass;
    CompensatedSum risk;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> fractions(101);
      for (int i = 0; i <= 100; ++i) fractions[static_cast<std::size_t>(i)] = i / 100.0;
      for (double q : search.tight_fractions(mass.value(), risk.value(), atoms[k])) {
        fractions.push_back(q);
      }
      for (double q : fractions) {
        search.offer({mass.value() + q * atoms[k].mass,
                      risk.value() + q * atoms[k].mass * atoms[k].risk});
      }
      mass += atoms[k].mass;
      risk += atoms[k].mass * atoms[k].risk;
    }
    search.offer({mass.value(), risk.value()});
  }

  // Arbitrary subsets, ignoring the threshold structure altogether.
  if (n <= kBruteForceSubsetAtoms) {
    const std::uint32_t subsets = 1u << n;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      CompensatedSum mass;
      CompensatedSum risk;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask & (1u << k)) {
          mass += atoms[k].mass;
          risk += atoms[k].mass * atoms[k].risk;
        }
      }
      search.offer({mass.value(), risk.value()});
      if (std::holds_alternative<CostBasedModel>(model)) continue;
      for (std::size_t f = 0; f < n; ++f) {
        if (mask & (1u << f)) continue;
        for (double q : search.tight_fractions(mass.value(), risk.value(), atoms[f])) {
          search.offer({mass.value() + q * atoms[f].mass,
                        risk.value() + q * atoms[f].mass * atoms[f].risk});
        }
      }
    }
  }

  return *search.best();
}

// --- empirical plug-in -------------------------------------------------------

EmpiricalRiskDistribution empirical_risk_distribution(std::span<const double> scores,
                                                      std::span<const double> losses) {
  if (scores.size() != losses.size()) throw ShapeError("scores and losses differ in length");
  if (scores.empty()) throw ShapeError("empirical risk distribution needs at least one sample");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) throw DomainError("non-finite score");
    if (!std::isfinite(losses[i]) || losses[i] < 0.0) throw DomainError("invalid loss value");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<ScoreGroup> groups;
  std::vector<RiskAtom> atoms;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    CompensatedSum loss_sum;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      loss_sum += losses[order[j]];
      ++j;
    }
    const std::size_t count = j - i;
    const double risk = loss_sum.value() / static_cast<double>(count);
    const double mass = static_cast<double>(count) / static_cast<double>(n);
    groups.push_back({scores[order[i]], risk, mass, count});
    atoms.push_back({risk, mass});
    i = j;
  }
  return {std::move(groups), DiscreteRiskDistribution(std::move(atoms))};
}

}  // namespace selc
