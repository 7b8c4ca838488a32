#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "selc/core.hpp"
#include "selc/models.hpp"
#include "selc/optimize.hpp"

namespace selc {

enum class ScoreKind { SELE, REG, TCP, Baseline };

std::string_view to_string(ScoreKind kind) noexcept;
/// Throws ConfigError on unknown names.
ScoreKind parse_score_kind(std::string_view name);

/// Learned uncertainty s(x) = <w_{h(x)}, x> + b_{h(x)}, one block per class
/// of the base classifier h. TCP scores are confidences and are negated by
/// score_dataset; Baseline scores carry no parameters.
struct UncertaintyScore {
  ScoreKind kind = ScoreKind::Baseline;
  ModelKind base_kind = ModelKind::LR;
  LinearScorer scorer;
  double reg_const = 0.0;
  double relative_gap = 0.0;
  std::size_t iterations = 0;

  std::size_t blocks() const noexcept { return scorer.rows; }
};

/// Random partition of {0..n-1} into chunk_count(n) nearly equal parts.
struct ChunkPlan {
  std::vector<std::vector<std::size_t>> chunks;

  std::size_t count() const noexcept { return chunks.size(); }
};

/// max(1, round(n / 500)) with ties rounded to even.
std::size_t chunk_count(std::size_t n) noexcept;

/// Shuffles with `rng`, then slices contiguously; sizes differ by at most one.
ChunkPlan make_chunk_plan(std::size_t n, Rng& rng);

/// Sparse row (x, 1) placed in block h-1 of the (d+1)Y dimensional score
/// parameter space.
struct MappedRow {
  Label predicted = 1;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  RowView view() const noexcept { return {indices, values}; }
};

MappedRow feature_map(const TrainedClassifier& base, const RowView& x);

/// Flattens a score into (w_1, b_1, ..., w_Y, b_Y), matching feature_map.
std::vector<double> pack_score_parameters(const LinearScorer& scorer);

/// s(x) for a row whose base prediction is already known.
double score_value(const LinearScorer& scorer, Label predicted, const RowView& x);

// --- training from explicit predictions and targets ----------------------------
// These take the base predictions h(x_i) directly, so the score can be fit on
// a feature view that differs from the one the classifier saw.

/// Ridge regression of `targets` on the block features. The block-diagonal
/// design decouples, so each block is solved separately.
UncertaintyScore fit_regression_score(ScoreKind kind, ModelKind base_kind, int num_labels,
                                      const Dataset& data, std::span<const Label> predictions,
                                      std::span<const double> targets, double reg_const);

/// Mean over chunks of the logistic pairwise proxy, one chunk plan drawn
/// from `rng`, minimized by bmrm_solve from theta = 0.
class SeleRiskOracle final : public RiskOracle {
 public:
  SeleRiskOracle(const Dataset& data, std::span<const Label> predictions,
                 std::span<const double> losses, int num_labels, ChunkPlan plan);

  std::size_t dim() const override;
  double evaluate(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const Dataset& data_;
  std::vector<Label> predictions_;
  std::vector<double> losses_;
  int num_labels_;
  ChunkPlan plan_;
};

/// Solver settings for SELE: stop within 1% of the optimum.
BmrmOptions sele_solver_options();

/// Throws SizeError when fewer than two samples are given.
UncertaintyScore fit_sele_score(ModelKind base_kind, int num_labels, const Dataset& data,
                                std::span<const Label> predictions, std::span<const double> losses,
                                double reg_const, Rng& rng,
                                const BmrmOptions& options = sele_solver_options());

// --- training against a classifier on the same feature view --------------------

UncertaintyScore train_reg_score(const TrainedClassifier& base, const Dataset& data,
                                 const LossSpec& loss, double reg_const);

UncertaintyScore train_sele_score(const TrainedClassifier& base, const Dataset& data,
                                  const LossSpec& loss, double reg_const, Rng& rng,
                                  const BmrmOptions& options = sele_solver_options());

/// Regresses the base posterior of the true label. Throws ContractError
/// unless the base is LR.
UncertaintyScore train_tcp_score(const TrainedClassifier& base, const Dataset& data,
                                 double reg_const);

/// Per-sample posterior of the true label, p(y_i | x_i).
std::vector<double> true_class_posteriors(const TrainedClassifier& base, const Dataset& data);

UncertaintyScore make_baseline_score(const TrainedClassifier& base);

// --- scoring --------------------------------------------------------------------

/// Uncertainty per sample, higher = more uncertain. Baseline delegates to
/// baseline_uncertainty; TCP is negated.
std::vector<double> score_dataset(const UncertaintyScore& score, const TrainedClassifier& base,
                                  const Dataset& data);

/// As score_dataset for learned scores whose base predictions are given.
/// Throws ContractError for Baseline scores.
std::vector<double> score_dataset(const UncertaintyScore& score, const Dataset& data,
                                  std::span<const Label> predictions);

}  // namespace selc
