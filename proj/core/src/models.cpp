#include "selc/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selc/errors.hpp"

namespace selc {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::LR: return "LR";
    case ModelKind::MulticlassSVM: return "MulticlassSVM";
    case ModelKind::BinarySVM: return "BinarySVM";
    case ModelKind::SVOR: return "SVOR";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "LR") return ModelKind::LR;
  if (name == "MulticlassSVM") return ModelKind::MulticlassSVM;
  if (name == "BinarySVM") return ModelKind::BinarySVM;
  if (name == "SVOR") return ModelKind::SVOR;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

BmrmOptions classifier_solver_options() {
  BmrmOptions o;
  o.gap_tol = 1e-3;
  return o;
}

std::size_t parameter_count(ModelKind kind, int num_labels, std::size_t dim) noexcept {
  const auto y = static_cast<std::size_t>(num_labels);
  switch (kind) {
    case ModelKind::LR:
    case ModelKind::MulticlassSVM: return y * (dim + 1);
    case ModelKind::BinarySVM: return dim + 1;
    case ModelKind::SVOR: return dim + y - 1;
  }
  return 0;
}

LinearScorer unpack_parameters(ModelKind kind, int num_labels, std::size_t dim,
                               std::span<const double> theta) {
  if (theta.size() != parameter_count(kind, num_labels, dim)) {
    throw ShapeError("parameter vector has the wrong length for this model");
  }
  const auto y = static_cast<std::size_t>(num_labels);
  switch (kind) {
    case ModelKind::LR:
    case ModelKind::MulticlassSVM: {
      LinearScorer s(y, dim, y);
      for (std::size_t c = 0; c < y; ++c) {
        const auto block = theta.subspan(c * (dim + 1), dim + 1);
        std::copy(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(dim),
                  s.weight_row(c).begin());
        s.biases[c] = block[dim];
      }
      return s;
    }
    case ModelKind::BinarySVM: {
      LinearScorer s(1, dim, 1);
      std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(dim), s.weights.begin());
      s.biases[0] = theta[dim];
      return s;
    }
    case ModelKind::SVOR: {
      LinearScorer s(1, dim, y - 1);
      std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(dim), s.weights.begin());
      std::copy(theta.begin() + static_cast<std::ptrdiff_t>(dim), theta.end(), s.biases.begin());
      return s;
    }
  }
  throw ContractError("unknown model kind");
}

std::vector<double> pack_parameters(const TrainedClassifier& model) {
  const auto& s = model.scorer;
  std::vector<double> theta;
  theta.reserve(parameter_count(model.kind, model.num_labels, s.dim));
  if (model.kind == ModelKind::LR || model.kind == ModelKind::MulticlassSVM) {
    for (std::size_t c = 0; c < s.rows; ++c) {
      const auto w = s.weight_row(c);
      theta.insert(theta.end(), w.begin(), w.end());
      theta.push_back(s.biases[c]);
    }
  } else {
    theta.insert(theta.end(), s.weights.begin(), s.weights.end());
    theta.insert(theta.end(), s.biases.begin(), s.biases.end());
  }
  return theta;
}

// --- oracles -------------------------------------------------------------------

namespace {

std::span<const double> block_weights(std::span<const double> theta, std::size_t c,
                                      std::size_t d) {
  return theta.subspan(c * (d + 1), d);
}

void require_binary(const Dataset& data) {
  if (data.num_labels() != 2) throw ContractError("binary hinge requires exactly two labels");
}

}  // namespace

std::size_t LogisticRiskOracle::dim() const {
  return parameter_count(ModelKind::LR, data_.num_labels(), data_.dim());
}

double LogisticRiskOracle::evaluate(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t d = data_.dim();
  const auto y_count = static_cast<std::size_t>(data_.num_labels());
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> act(y_count);
  double risk = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const RowView x = data_.row(i);
    for (std::size_t c = 0; c < y_count; ++c) {
      act[c] = x.dot(block_weights(theta, c, d)) + theta[c * (d + 1) + d];
    }
    const double top = *std::max_element(act.begin(), act.end());
    double z = 0.0;
    for (double a : act) z += std::exp(a - top);
    const double log_z = top + std::log(z);
    const auto yi = static_cast<std::size_t>(data_.label(i) - 1);
    risk += log_z - act[yi];
    for (std::size_t c = 0; c < y_count; ++c) {
      const double coef = (std::exp(act[c] - log_z) - (c == yi ? 1.0 : 0.0)) * inv_n;
      x.add_scaled(coef, grad.subspan(c * (d + 1), d));
      grad[c * (d + 1) + d] += coef;
    }
  }
  return risk * inv_n;
}

std::size_t MulticlassHingeOracle::dim() const {
  return parameter_count(ModelKind::MulticlassSVM, data_.num_labels(), data_.dim());
}

double MulticlassHingeOracle::evaluate(std::span<const double> theta,
                                       std::span<double> grad) const {
  const std::size_t d = data_.dim();
  const auto y_count = static_cast<std::size_t>(data_.num_labels());
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> act(y_count);
  double risk = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const RowView x = data_.row(i);
    for (std::size_t c = 0; c < y_count; ++c) {
      act[c] = x.dot(block_weights(theta, c, d)) + theta[c * (d + 1) + d];
    }
    const auto yi = static_cast<std::size_t>(data_.label(i) - 1);
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < y_count; ++c) {
      const double v = (c == yi ? 0.0 : 1.0) + act[c] - act[yi];
      if (v > best_val) {
        best_val = v;
        best = c;
      }
    }
    risk += best_val;
    if (best != yi) {
      x.add_scaled(inv_n, grad.subspan(best * (d + 1), d));
      grad[best * (d + 1) + d] += inv_n;
      x.add_scaled(-inv_n, grad.subspan(yi * (d + 1), d));
      grad[yi * (d + 1) + d] -= inv_n;
    }
  }
  return risk * inv_n;
}

BinaryHingeOracle::BinaryHingeOracle(const Dataset& data) : data_(data) { require_binary(data); }

std::size_t BinaryHingeOracle::dim() const { return data_.dim() + 1; }

double BinaryHingeOracle::evaluate(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t d = data_.dim();
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto w = theta.first(d);
  double risk = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const RowView x = data_.row(i);
    const double t = data_.label(i) == 2 ? 1.0 : -1.0;
    const double slack = 1.0 - t * (x.dot(w) + theta[d]);
    if (slack > 0.0) {
      risk += slack;
      x.add_scaled(-t * inv_n, grad.first(d));
      grad[d] -= t * inv_n;
    }
  }
  return risk * inv_n;
}

OrdinalHingeOracle::OrdinalHingeOracle(const Dataset& data) : data_(data) {
  if (data.num_labels() < 2) throw ContractError("ordinal regression needs at least two labels");
}

std::size_t OrdinalHingeOracle::dim() const {
  return parameter_count(ModelKind::SVOR, data_.num_labels(), data_.dim());
}

double OrdinalHingeOracle::evaluate(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t d = data_.dim();
  const auto thresholds = static_cast<std::size_t>(data_.num_labels() - 1);
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto w = theta.first(d);
  const auto b = theta.subspan(d, thresholds);
  double risk = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const RowView x = data_.row(i);
    const double proj = x.dot(w);
    const auto yi = static_cast<std::size_t>(data_.label(i));
    double w_coef = 0.0;
    // Thresholds 1..yi-1 should lie below the projection, yi..Y-1 above it.
    for (std::size_t k = 0; k < thresholds; ++k) {
      if (k + 1 < yi) {
        const double slack = 1.0 - proj + b[k];
        if (slack > 0.0) {
          risk += slack;
          w_coef -= inv_n;
          grad[d + k] += inv_n;
        }
      } else {
        const double slack = 1.0 + proj - b[k];
        if (slack > 0.0) {
          risk += slack;
          w_coef += inv_n;
          grad[d + k] -= inv_n;
        }
      }
    }
    if (w_coef != 0.0) x.add_scaled(w_coef, grad.first(d));
  }
  return risk * inv_n;
}

// --- training ------------------------------------------------------------------

namespace {

void require_two_classes(const Dataset& data) {
  if (data.distinct_labels() < 2) {
    throw DegenerateDataError("training data contains a single class");
  }
}

TrainedClassifier finish(ModelKind kind, const Dataset& data, double reg_const,
                         const SolveReport& report) {
  TrainedClassifier model;
  model.kind = kind;
  model.num_labels = data.num_labels();
  model.scorer = unpack_parameters(kind, data.num_labels(), data.dim(), report.theta);
  model.reg_const = reg_const;
  model.relative_gap = report.relative_gap;
  model.iterations = report.iterations;
  return model;
}

}  // namespace

TrainedClassifier lr_train(const Dataset& data, double reg_const, const BmrmOptions& options) {
  require_two_classes(data);
  LogisticRiskOracle oracle(data);
  return finish(ModelKind::LR, data, reg_const, bmrm_solve(oracle, reg_const, options));
}

TrainedClassifier svm_train(const Dataset& data, double reg_const, const BmrmOptions& options) {
  require_two_classes(data);
  if (data.num_labels() == 2) {
    BinaryHingeOracle oracle(data);
    return finish(ModelKind::BinarySVM, data, reg_const, bmrm_solve(oracle, reg_const, options));
  }
  MulticlassHingeOracle oracle(data);
  return finish(ModelKind::MulticlassSVM, data, reg_const, bmrm_solve(oracle, reg_const, options));
}

TrainedClassifier svor_train(const Dataset& data, double reg_const, const BmrmOptions& options) {
  require_two_classes(data);
  OrdinalHingeOracle oracle(data);
  return finish(ModelKind::SVOR, data, reg_const, bmrm_solve(oracle, reg_const, options));
}

TrainedClassifier train_classifier(ModelKind kind, const Dataset& data, double reg_const,
                                   const BmrmOptions& options) {
  switch (kind) {
    case ModelKind::LR: return lr_train(data, reg_const, options);
    case ModelKind::MulticlassSVM:
    case ModelKind::BinarySVM: return svm_train(data, reg_const, options);
    case ModelKind::SVOR: return svor_train(data, reg_const, options);
  }
  throw ContractError("unknown model kind");
}

double training_objective(const TrainedClassifier& model, const Dataset& data) {
  const auto theta = pack_parameters(model);
  std::vector<double> grad(theta.size());
  double risk = 0.0;
  switch (model.kind) {
    case ModelKind::LR: risk = LogisticRiskOracle(data).evaluate(theta, grad); break;
    case ModelKind::MulticlassSVM: risk = MulticlassHingeOracle(data).evaluate(theta, grad); break;
    case ModelKind::BinarySVM: risk = BinaryHingeOracle(data).evaluate(theta, grad); break;
    case ModelKind::SVOR: risk = OrdinalHingeOracle(data).evaluate(theta, grad); break;
  }
  double sq = 0.0;
  for (double v : theta) sq += v * v;
  return 0.5 * std::max(model.reg_const, kBmrmMinReg) * sq + risk;
}

// --- prediction ----------------------------------------------------------------

void check_row(const TrainedClassifier& model, const RowView& x) {
  const std::size_t d = model.dim();
  const bool fits = x.dense() ? x.values.size() == d : (x.indices.empty() || x.indices.back() < d);
  if (!fits) throw ShapeError("feature row does not match model dimension " + std::to_string(d));
}

std::vector<double> activations(const TrainedClassifier& model, const RowView& x) {
  check_row(model, x);
  const auto& s = model.scorer;
  switch (model.kind) {
    case ModelKind::LR:
    case ModelKind::MulticlassSVM: {
      std::vector<double> act(s.rows);
      for (std::size_t c = 0; c < s.rows; ++c) act[c] = s.activation(c, x);
      return act;
    }
    case ModelKind::BinarySVM: return {s.activation(0, x)};
    case ModelKind::SVOR: return {s.project(0, x)};
  }
  throw ContractError("unknown model kind");
}

std::vector<double> softmax(std::span<const double> act) {
  std::vector<double> p(act.size());
  if (act.empty()) return p;
  const double top = *std::max_element(act.begin(), act.end());
  double z = 0.0;
  for (std::size_t c = 0; c < act.size(); ++c) {
    p[c] = std::exp(act[c] - top);
    z += p[c];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> lr_posterior(const TrainedClassifier& model, const RowView& x) {
  if (model.kind != ModelKind::LR) throw ContractError("posterior requires a logistic model");
  return softmax(activations(model, x));
}

std::size_t argmax_first(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[best]) best = c;
  }
  return best;
}

Label predict(const TrainedClassifier& model, const RowView& x) {
  const auto act = activations(model, x);
  switch (model.kind) {
    case ModelKind::LR:
    case ModelKind::MulticlassSVM: return static_cast<Label>(argmax_first(act)) + 1;
    case ModelKind::BinarySVM: return act[0] > 0.0 ? 2 : 1;
    case ModelKind::SVOR: {
      Label y = 1;
      for (double b : model.scorer.biases) {
        if (act[0] > b) ++y;
      }
      return y;
    }
  }
  throw ContractError("unknown model kind");
}

std::vector<Label> predict_all(const TrainedClassifier& model, const Dataset& data) {
  std::vector<Label> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(model, data.row(i));
  return out;
}

double baseline_uncertainty(const TrainedClassifier& model, const RowView& x) {
  const auto act = activations(model, x);
  switch (model.kind) {
    case ModelKind::LR: {
      const auto p = softmax(act);
      return 1.0 - *std::max_element(p.begin(), p.end());
    }
    case ModelKind::MulticlassSVM: return -*std::max_element(act.begin(), act.end());
    case ModelKind::BinarySVM: return -std::fabs(act[0]);
    case ModelKind::SVOR: {
      double closest = std::numeric_limits<double>::infinity();
      for (double b : model.scorer.biases) closest = std::min(closest, std::fabs(act[0] - b));
      return -closest;
    }
  }
  throw ContractError("unknown model kind");
}

}  // namespace selc
