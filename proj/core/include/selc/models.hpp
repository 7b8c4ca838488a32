#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "selc/core.hpp"
#include "selc/optimize.hpp"

namespace selc {

enum class ModelKind { LR, MulticlassSVM, BinarySVM, SVOR };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts the names produced by to_string. Throws ConfigError.
ModelKind parse_model_kind(std::string_view name);

/// Linear base classifier.
///
/// Parameter layout of `scorer`:
///   LR, MulticlassSVM  Y weight rows, Y biases; h(x) = argmax_y <w_y,x> + b_y
///   BinarySVM          1 weight row, 1 bias;  h(x) = 2 if <w,x> + b > 0 else 1
///   SVOR               1 weight row, Y-1 thresholds; h(x) = 1 + #{y : <w,x> > b_y}
struct TrainedClassifier {
  ModelKind kind = ModelKind::LR;
  int num_labels = 2;
  LinearScorer scorer;
  double reg_const = 0.0;
  double relative_gap = 0.0;
  std::size_t iterations = 0;

  std::size_t dim() const noexcept { return scorer.dim; }
};

/// Default solver settings for base classifiers.
BmrmOptions classifier_solver_options();

// --- risk oracles --------------------------------------------------------------
// theta is packed block-wise: for LR / MulticlassSVM, block y holds
// (w_y, b_y) at offset (y-1)(d+1); BinarySVM packs (w, b); SVOR packs
// (w, b_1..b_{Y-1}).

std::size_t parameter_count(ModelKind kind, int num_labels, std::size_t dim) noexcept;
LinearScorer unpack_parameters(ModelKind kind, int num_labels, std::size_t dim,
                               std::span<const double> theta);
std::vector<double> pack_parameters(const TrainedClassifier& model);

/// Mean negative log-likelihood of the softmax model.
class LogisticRiskOracle final : public RiskOracle {
 public:
  explicit LogisticRiskOracle(const Dataset& data) : data_(data) {}
  std::size_t dim() const override;
  double evaluate(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const Dataset& data_;
};

/// Mean multiclass hinge max_y ([y != y_i] + a_y(x_i) - a_{y_i}(x_i)) with
/// a_y(x) = <w_y, x> + b_y. The subgradient uses the smallest maximizing class.
class MulticlassHingeOracle final : public RiskOracle {
 public:
  explicit MulticlassHingeOracle(const Dataset& data) : data_(data) {}
  std::size_t dim() const override;
  double evaluate(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const Dataset& data_;
};

/// Mean binary hinge max(0, 1 - t_i (<w, x_i> + b)), t_i = -1 for label 1
/// and +1 for label 2.
class BinaryHingeOracle final : public RiskOracle {
 public:
  explicit BinaryHingeOracle(const Dataset& data);
  std::size_t dim() const override;
  double evaluate(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const Dataset& data_;
};

/// Ordinal hinge with implicit constraints: for each sample, one hinge per
/// threshold on the side where the projection should lie.
class OrdinalHingeOracle final : public RiskOracle {
 public:
  explicit OrdinalHingeOracle(const Dataset& data);
  std::size_t dim() const override;
  double evaluate(std::span<const double> theta, std::span<double> grad) const override;

 private:
  const Dataset& data_;
};

// --- training ------------------------------------------------------------------

/// Throws DegenerateDataError when fewer than two classes occur.
TrainedClassifier lr_train(const Dataset& data, double reg_const,
                           const BmrmOptions& options = classifier_solver_options());

/// Binary hinge when the dataset has exactly two labels, multiclass hinge
/// otherwise.
TrainedClassifier svm_train(const Dataset& data, double reg_const,
                            const BmrmOptions& options = classifier_solver_options());

TrainedClassifier svor_train(const Dataset& data, double reg_const,
                             const BmrmOptions& options = classifier_solver_options());

/// Dispatches on kind; MulticlassSVM and BinarySVM both go through svm_train.
TrainedClassifier train_classifier(ModelKind kind, const Dataset& data, double reg_const,
                                   const BmrmOptions& options = classifier_solver_options());

/// (C/2)||theta||^2 + R(theta) of the model on `data`, with C = reg_const.
double training_objective(const TrainedClassifier& model, const Dataset& data);

// --- prediction ----------------------------------------------------------------

/// Raw per-class activations (LR / MulticlassSVM), the signed margin
/// (BinarySVM, one entry), or the projection <w, x> (SVOR, one entry).
std::vector<double> activations(const TrainedClassifier& model, const RowView& x);

/// Softmax of the activations. Throws ContractError unless kind == LR.
std::vector<double> lr_posterior(const TrainedClassifier& model, const RowView& x);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> activations);

/// Index (0-based) of the first maximum.
std::size_t argmax_first(std::span<const double> values) noexcept;

Label predict(const TrainedClassifier& model, const RowView& x);
std::vector<Label> predict_all(const TrainedClassifier& model, const Dataset& data);

/// Uncertainty derived from the classifier output; higher means more
/// uncertain. LR: 1 - max posterior; MulticlassSVM: -max activation;
/// BinarySVM: -|margin|; SVOR: -min_y |<w,x> - b_y|.
double baseline_uncertainty(const TrainedClassifier& model, const RowView& x);

/// Throws ShapeError unless the row fits the model dimension.
void check_row(const TrainedClassifier& model, const RowView& x);

}  // namespace selc
