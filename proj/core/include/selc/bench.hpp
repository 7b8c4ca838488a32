#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "selc/dataio.hpp"
#include "selc/errors.hpp"
#include "selc/models.hpp"
#include "selc/scores.hpp"

namespace selc {

/// A rank table with a missing or non-finite cell.
class IncompleteGridError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

// --- rank statistics ------------------------------------------------------------

struct RankTable {
  std::vector<std::vector<double>> per_dataset;  // D x K, rank 1 = smallest value
  std::vector<double> average;                   // K
};

/// Ranks the K values of each row (ties share the mean rank) and averages
/// over the D rows. Throws IncompleteGridError on NaN cells or ragged rows.
RankTable rank_methods(const std::vector<std::vector<double>>& values);

struct FriedmanResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  int degrees_of_freedom = 0;
  bool rejected = false;
};

/// Chi-square critical value for df in 1..9 and alpha in {0.05, 0.10}.
double chi_square_critical(int df, double alpha);

/// Friedman statistic on a D x K rank matrix, compared with the chi-square
/// critical value on K-1 degrees of freedom. Requires D >= 2, K in 2..10.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& ranks, double alpha);

/// Studentized range statistic divided by sqrt(2), K in 2..10.
double nemenyi_q(int num_methods, double alpha);

/// q_alpha(K) * sqrt(K (K + 1) / (6 N)).
double nemenyi_cd(int num_methods, int num_datasets, double alpha);

/// 100 (baseline - method) / baseline. Throws DomainError unless baseline > 0.
double relative_improvement(double baseline_aurc, double method_aurc);

// --- protocol -------------------------------------------------------------------

/// Seed for an independent random stream of one (replicate, grid cell),
/// derived from the run seed with SplitMix64.
std::uint64_t stream_seed(std::uint64_t seed, int replicate, std::size_t index);

/// "MCP" for a logistic base, "MARGIN" for the hinge-loss models.
std::string baseline_method_name(ModelKind base);
std::string method_name(ScoreKind kind, ModelKind base);

/// Loss used to evaluate a base model: 100 x zero-one, or MAE for SVOR.
LossSpec protocol_loss(ModelKind base, int num_labels);

struct ProtocolConfig {
  ModelKind base_kind = ModelKind::LR;
  std::vector<ScoreKind> methods{ScoreKind::Baseline, ScoreKind::SELE, ScoreKind::REG};
  std::vector<double> classifier_grid{1, 10, 100, 1000};
  std::vector<double> score_grid{0, 1, 10, 100, 1000};
  int replicates = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  BmrmOptions classifier_options = classifier_solver_options();
  BmrmOptions score_options = sele_solver_options();
};

/// Throws ConfigError for method/base pairs that do not apply (TCP needs
/// LR), empty grids or invalid counts.
void validate_protocol(const ProtocolConfig& config);

struct DatasetJob {
  std::string name;
  Dataset data;
  std::array<double, kSplitCount> ratios{30, 10, 30, 10, 20};
};

struct ResultRow {
  std::string dataset;
  std::string method;
  int replicate = 1;
  double c_classifier = 0.0;
  std::optional<double> c_score;  // absent for the baseline
  double aurc = 0.0;
  double r_at_90 = 0.0;
  double r_at_100 = 0.0;
};

struct SummaryCell {
  std::string dataset;
  std::string method;
  std::size_t count = 0;
  double aurc_mean = 0.0, aurc_std = 0.0;
  double r90_mean = 0.0, r90_std = 0.0;
  double r100_mean = 0.0, r100_std = 0.0;
};

struct ExperimentResult {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::vector<ResultRow> rows;  // dataset-major, then replicate, then method

  /// Mean and population standard deviation over replicates, in
  /// datasets x methods order.
  std::vector<SummaryCell> summarize() const;

  /// D x K matrix of mean test AuRC.
  std::vector<std::vector<double>> mean_aurc_grid() const;
};

/// Replicate r of every dataset splits with seed + r - 1, fits the base on
/// Trn1 (C by Val1 risk) and each score on Trn2 (C by Val2 AuRC), and
/// evaluates on Tst. Replicates run on `threads` workers; the result does
/// not depend on the thread count.
ExperimentResult run_protocol(const std::vector<DatasetJob>& datasets,
                              const ProtocolConfig& config);

void write_results_csv(std::ostream& out, const ExperimentResult& result);

struct SummaryOptions {
  double alpha = 0.05;
  double nemenyi_alpha = 0.10;
  std::string provenance;  // emitted as the first JSON field when non-empty
};

void write_summary_text(std::ostream& out, const ExperimentResult& result,
                        const SummaryOptions& options = {});
std::string summary_json(const ExperimentResult& result, const SummaryOptions& options = {});

}  // namespace selc
