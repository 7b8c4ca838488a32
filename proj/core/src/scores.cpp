#include "selc/scores.hpp"

#include <string>

#include <Eigen/Dense>

#include "selc/errors.hpp"
#include "selc/metrics.hpp"

namespace selc {

std::string_view to_string(ScoreKind kind) noexcept {
  switch (kind) {
    case ScoreKind::SELE: return "SELE";
    case ScoreKind::REG: return "REG";
    case ScoreKind::TCP: return "TCP";
    case ScoreKind::Baseline: return "Baseline";
  }
  return "?";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "SELE") return ScoreKind::SELE;
  if (name == "REG") return ScoreKind::REG;
  if (name == "TCP") return ScoreKind::TCP;
  if (name == "Baseline") return ScoreKind::Baseline;
  throw ConfigError("unknown score kind '" + std::string(name) + "'");
}

std::size_t chunk_count(std::size_t n) noexcept {
  std::size_t q = n / 500;
  const std::size_t r = n % 500;
  if (r > 250 || (r == 250 && q % 2 == 1)) ++q;
  return q == 0 ? 1 : q;
}

ChunkPlan make_chunk_plan(std::size_t n, Rng& rng) {
  const auto perm = rng.permutation(n);
  const std::size_t p = chunk_count(n);
  const std::size_t base = n / p;
  const std::size_t extra = n % p;
  ChunkPlan plan;
  plan.chunks.reserve(p);
  std::size_t at = 0;
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    plan.chunks.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(at),
                             perm.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  return plan;
}

MappedRow feature_map(const TrainedClassifier& base, const RowView& x) {
  MappedRow out;
  out.predicted = predict(base, x);
  const std::size_t d = base.dim();
  const auto offset = static_cast<std::uint32_t>(static_cast<std::size_t>(out.predicted - 1) * (d + 1));
  x.for_each([&](std::size_t j, double v) {
    out.indices.push_back(offset + static_cast<std::uint32_t>(j));
    out.values.push_back(v);
  });
  out.indices.push_back(offset + static_cast<std::uint32_t>(d));
  out.values.push_back(1.0);
  return out;
}

std::vector<double> pack_score_parameters(const LinearScorer& scorer) {
  std::vector<double> theta;
  theta.reserve(scorer.rows * (scorer.dim + 1));
  for (std::size_t r = 0; r < scorer.rows; ++r) {
    const auto w = scorer.weight_row(r);
    theta.insert(theta.end(), w.begin(), w.end());
    theta.push_back(scorer.biases[r]);
  }
  return theta;
}

double score_value(const LinearScorer& scorer, Label predicted, const RowView& x) {
  if (predicted < 1 || static_cast<std::size_t>(predicted) > scorer.rows) {
    throw DomainError("prediction " + std::to_string(predicted) + " has no score block");
  }
  const bool fits = x.dense() ? x.values.size() == scorer.dim
                              : (x.indices.empty() || x.indices.back() < scorer.dim);
  if (!fits) throw ShapeError("feature row does not match score dimension");
  return scorer.activation(static_cast<std::size_t>(predicted - 1), x);
}

namespace {

void check_score_inputs(int num_labels, const Dataset& data, std::span<const Label> predictions,
                        std::span<const double> targets) {
  if (num_labels < 1) throw DomainError("score needs at least one block");
  if (predictions.size() != data.size() || targets.size() != data.size()) {
    throw ShapeError("predictions and targets must have one entry per sample");
  }
  for (Label h : predictions) {
    if (h < 1 || h > num_labels) throw DomainError("prediction outside {1..Y}");
  }
}

LinearScorer unpack_score(std::span<const double> theta, std::size_t blocks, std::size_t d) {
  LinearScorer s(blocks, d, blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t j = 0; j < d; ++j) s.weight_row(b)[j] = theta[b * (d + 1) + j];
    s.biases[b] = theta[b * (d + 1) + d];
  }
  return s;
}

}  // namespace

UncertaintyScore fit_regression_score(ScoreKind kind, ModelKind base_kind, int num_labels,
                                      const Dataset& data, std::span<const Label> predictions,
                                      std::span<const double> targets, double reg_const) {
  check_score_inputs(num_labels, data, predictions, targets);
  const std::size_t d = data.dim();
  const auto blocks = static_cast<std::size_t>(num_labels);
  const double n = static_cast<double>(data.size());

  UncertaintyScore score;
  score.kind = kind;
  score.base_kind = base_kind;
  score.scorer = LinearScorer(blocks, d, blocks);
  score.reg_const = reg_const;

  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (static_cast<std::size_t>(predictions[i] - 1) == b) members.push_back(i);
    }
    if (members.empty()) continue;
    const auto rows = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd t(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto i = members[static_cast<std::size_t>(r)];
      data.row(i).for_each([&](std::size_t j, double v) { design(r, static_cast<Eigen::Index>(j)) = v; });
      design(r, static_cast<Eigen::Index>(d)) = 1.0;
      t(r) = targets[i];
    }
    // Restricting the 1/n mean to this block's rows rescales C by n / n_b.
    const double block_reg = reg_const * n / static_cast<double>(members.size());
    const Eigen::VectorXd theta = ridge_solve(design, t, block_reg);
    for (std::size_t j = 0; j < d; ++j) score.scorer.weight_row(b)[j] = theta(static_cast<Eigen::Index>(j));
    score.scorer.biases[b] = theta(static_cast<Eigen::Index>(d));
  }
  return score;
}

SeleRiskOracle::SeleRiskOracle(const Dataset& data, std::span<const Label> predictions,
                               std::span<const double> losses, int num_labels, ChunkPlan plan)
    : data_(data),
      predictions_(predictions.begin(), predictions.end()),
      losses_(losses.begin(), losses.end()),
      num_labels_(num_labels),
      plan_(std::move(plan)) {
  check_score_inputs(num_labels, data, predictions, losses);
  for (const auto& chunk : plan_.chunks) {
    if (chunk.size() < 2) throw SizeError("every chunk needs at least two samples");
  }
}

std::size_t SeleRiskOracle::dim() const {
  return static_cast<std::size_t>(num_labels_) * (data_.dim() + 1);
}

double SeleRiskOracle::evaluate(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t d = data_.dim();
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_p = 1.0 / static_cast<double>(plan_.count());
  std::vector<double> s;
  std::vector<double> l;
  std::vector<double> g;
  double total = 0.0;
  for (const auto& chunk : plan_.chunks) {
    s.resize(chunk.size());
    l.resize(chunk.size());
    g.resize(chunk.size());
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const std::size_t i = chunk[k];
      const std::size_t off = static_cast<std::size_t>(predictions_[i] - 1) * (d + 1);
      s[k] = data_.row(i).dot(theta.subspan(off, d)) + theta[off + d];
      l[k] = losses_[i];
    }
    total += sele_proxy_with_gradient(s, l, g);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      if (g[k] == 0.0) continue;
      const std::size_t i = chunk[k];
      const std::size_t off = static_cast<std::size_t>(predictions_[i] - 1) * (d + 1);
      data_.row(i).add_scaled(g[k] * inv_p, grad.subspan(off, d));
      grad[off + d] += g[k] * inv_p;
    }
  }
  return total * inv_p;
}

BmrmOptions sele_solver_options() {
  BmrmOptions o;
  o.gap_tol = 0.01;
  return o;
}

UncertaintyScore fit_sele_score(ModelKind base_kind, int num_labels, const Dataset& data,
                                std::span<const Label> predictions, std::span<const double> losses,
                                double reg_const, Rng& rng, const BmrmOptions& options) {
  if (data.size() < 2) throw SizeError("SELE training needs at least two samples");
  SeleRiskOracle oracle(data, predictions, losses, num_labels, make_chunk_plan(data.size(), rng));
  const auto report = bmrm_solve(oracle, reg_const, options);
  UncertaintyScore score;
  score.kind = ScoreKind::SELE;
  score.base_kind = base_kind;
  score.scorer = unpack_score(report.theta, static_cast<std::size_t>(num_labels), data.dim());
  score.reg_const = reg_const;
  score.relative_gap = report.relative_gap;
  score.iterations = report.iterations;
  return score;
}

UncertaintyScore train_reg_score(const TrainedClassifier& base, const Dataset& data,
                                 const LossSpec& loss, double reg_const) {
  const auto predictions = predict_all(base, data);
  const auto losses = loss_vector(loss, data, predictions);
  return fit_regression_score(ScoreKind::REG, base.kind, base.num_labels, data, predictions,
                              losses, reg_const);
}

UncertaintyScore train_sele_score(const TrainedClassifier& base, const Dataset& data,
                                  const LossSpec& loss, double reg_const, Rng& rng,
                                  const BmrmOptions& options) {
  if (data.size() < 2) throw SizeError("SELE training needs at least two samples");
  const auto predictions = predict_all(base, data);
  const auto losses = loss_vector(loss, data, predictions);
  return fit_sele_score(base.kind, base.num_labels, data, predictions, losses, reg_const, rng,
                        options);
}

std::vector<double> true_class_posteriors(const TrainedClassifier& base, const Dataset& data) {
  if (base.kind != ModelKind::LR) throw ContractError("TCP requires a logistic base model");
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = lr_posterior(base, data.row(i))[static_cast<std::size_t>(data.label(i) - 1)];
  }
  return out;
}

UncertaintyScore train_tcp_score(const TrainedClassifier& base, const Dataset& data,
                                 double reg_const) {
  const auto targets = true_class_posteriors(base, data);
  const auto predictions = predict_all(base, data);
  return fit_regression_score(ScoreKind::TCP, base.kind, base.num_labels, data, predictions,
                              targets, reg_const);
}

UncertaintyScore make_baseline_score(const TrainedClassifier& base) {
  UncertaintyScore score;
  score.kind = ScoreKind::Baseline;
  score.base_kind = base.kind;
  return score;
}

std::vector<double> score_dataset(const UncertaintyScore& score, const TrainedClassifier& base,
                                  const Dataset& data) {
  if (score.base_kind != base.kind) throw ContractError("score was trained for another model kind");
  if (score.kind == ScoreKind::Baseline) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = baseline_uncertainty(base, data.row(i));
    return out;
  }
  return score_dataset(score, data, predict_all(base, data));
}

std::vector<double> score_dataset(const UncertaintyScore& score, const Dataset& data,
                                  std::span<const Label> predictions) {
  if (score.kind == ScoreKind::Baseline) {
    throw ContractError("baseline scores need the classifier itself");
  }
  if (predictions.size() != data.size()) throw ShapeError("one prediction per sample is required");
  const double sign = score.kind == ScoreKind::TCP ? -1.0 : 1.0;
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = sign * score_value(score.scorer, predictions[i], data.row(i));
  }
  return out;
}

}  // namespace selc
