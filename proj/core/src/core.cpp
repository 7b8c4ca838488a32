#include "selc/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "selc/errors.hpp"

namespace selc {

namespace {

void check_label(const LossSpec& spec, Label y) {
  if (y < 1 || y > spec.num_labels) {
    throw DomainError("label " + std::to_string(y) + " outside {1.." +
                      std::to_string(spec.num_labels) + "}");
  }
}

}  // namespace

double evaluate_loss(const LossSpec& spec, Label y_true, Label y_pred) {
  check_label(spec, y_true);
  check_label(spec, y_pred);
  switch (spec.kind) {
    case LossKind::ZeroOneTimes100:
      return y_true == y_pred ? 0.0 : 100.0;
    case LossKind::MAE:
      return std::fabs(static_cast<double>(y_true - y_pred));
  }
  return 0.0;
}

std::vector<double> loss_vector(const LossSpec& spec, std::span<const Label> labels,
                                std::span<const Label> predictions) {
  if (labels.size() != predictions.size()) {
    throw ShapeError("loss_vector: " + std::to_string(labels.size()) + " labels vs " +
                     std::to_string(predictions.size()) + " predictions");
  }
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = evaluate_loss(spec, labels[i], predictions[i]);
  }
  return out;
}

std::vector<double> loss_vector(const LossSpec& spec, const Dataset& data,
                                std::span<const Label> predictions) {
  return loss_vector(spec, data.labels(), predictions);
}

// --- FeatureMatrix ---------------------------------------------------------

FeatureMatrix FeatureMatrix::dense(std::size_t rows, std::size_t cols,
                                   std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("dense matrix: expected " + std::to_string(rows * cols) + " values, got " +
                     std::to_string(values.size()));
  }
  FeatureMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.sparse_ = false;
  m.values_ = std::move(values);
  return m;
}

FeatureMatrix FeatureMatrix::sparse(std::size_t cols, const std::vector<std::vector<Entry>>& rows) {
  FeatureMatrix m;
  m.rows_ = rows.size();
  m.cols_ = cols;
  m.sparse_ = true;
  m.row_ptr_.reserve(rows.size() + 1);
  m.row_ptr_.push_back(0);
  for (const auto& r : rows) {
    std::int64_t prev = -1;
    for (const auto& e : r) {
      if (static_cast<std::int64_t>(e.index) <= prev || e.index >= cols) {
        throw ShapeError("sparse row indices must be increasing and below the column count");
      }
      prev = e.index;
      m.col_index_.push_back(e.index);
      m.values_.push_back(e.value);
    }
    m.row_ptr_.push_back(m.values_.size());
  }
  return m;
}

RowView FeatureMatrix::row(std::size_t i) const noexcept {
  if (!sparse_) return {{}, {values_.data() + i * cols_, cols_}};
  const std::size_t begin = row_ptr_[i];
  const std::size_t len = row_ptr_[i + 1] - begin;
  return {{col_index_.data() + begin, len}, {values_.data() + begin, len}};
}

double FeatureMatrix::at(std::size_t i, std::size_t j) const noexcept {
  if (!sparse_) return values_[i * cols_ + j];
  const auto first = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  if (!sparse_) {
    std::vector<double> vals;
    vals.reserve(rows.size() * cols_);
    for (auto r : rows) {
      const auto* p = values_.data() + r * cols_;
      vals.insert(vals.end(), p, p + cols_);
    }
    return dense(rows.size(), cols_, std::move(vals));
  }
  FeatureMatrix m;
  m.rows_ = rows.size();
  m.cols_ = cols_;
  m.sparse_ = true;
  m.row_ptr_.reserve(rows.size() + 1);
  m.row_ptr_.push_back(0);
  for (auto r : rows) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      m.col_index_.push_back(col_index_[k]);
      m.values_.push_back(values_[k]);
    }
    m.row_ptr_.push_back(m.values_.size());
  }
  return m;
}

// --- Dataset ---------------------------------------------------------------

Dataset::Dataset(FeatureMatrix features, std::vector<Label> labels, int num_labels,
                 std::vector<double> raw_labels)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      num_labels_(num_labels),
      raw_labels_(std::move(raw_labels)) {
  if (labels_.empty()) throw SizeError("dataset must contain at least one sample");
  if (features_.cols() < 1) throw ShapeError("dataset must have at least one feature");
  if (features_.rows() != labels_.size()) {
    throw ShapeError("dataset: " + std::to_string(features_.rows()) + " feature rows vs " +
                     std::to_string(labels_.size()) + " labels");
  }
  if (num_labels_ < 1) throw DomainError("label count must be positive");
  if (!raw_labels_.empty() && raw_labels_.size() != static_cast<std::size_t>(num_labels_)) {
    throw ShapeError("label map size must equal the label count");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 1 || labels_[i] > num_labels_) {
      throw DomainError("sample " + std::to_string(i) + ": label " + std::to_string(labels_[i]) +
                        " outside {1.." + std::to_string(num_labels_) + "}");
    }
    bool finite = true;
    features_.row(i).for_each([&](std::size_t, double v) { finite = finite && std::isfinite(v); });
    if (!finite) throw NumericError("sample " + std::to_string(i) + " has a non-finite feature");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(labels_.at(i));
  return Dataset(features_.select_rows(indices), std::move(labels), num_labels_, raw_labels_);
}

int Dataset::distinct_labels() const {
  std::vector<bool> seen(static_cast<std::size_t>(num_labels_) + 1, false);
  int count = 0;
  for (auto y : labels_) {
    if (!seen[static_cast<std::size_t>(y)]) {
      seen[static_cast<std::size_t>(y)] = true;
      ++count;
    }
  }
  return count;
}

// --- LinearScorer ----------------------------------------------------------

LinearScorer::LinearScorer(std::size_t rows_, std::size_t dim_, std::size_t num_biases)
    : dim(dim_), rows(rows_), weights(rows_ * dim_, 0.0), biases(num_biases, 0.0) {}

void LinearScorer::validate() const {
  if (weights.size() != rows * dim) throw ShapeError("linear scorer weight size mismatch");
  for (double v : weights) {
    if (!std::isfinite(v)) throw NumericError("non-finite weight");
  }
  for (double v : biases) {
    if (!std::isfinite(v)) throw NumericError("non-finite bias");
  }
}

// --- Rng -------------------------------------------------------------------

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::below requires n > 0");
  // Largest multiple of n representable; draws at or above it are redrawn.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(p));
  return p;
}

}  // namespace selc
