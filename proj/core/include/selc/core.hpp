#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace selc {

/// Class labels are 1-based: {1, ..., Y}.
using Label = int;

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind {
  ZeroOneTimes100,  // 100 * [y != y'], errors read as percentages
  MAE,              // |y - y'| for ordinal labels
};

struct LossSpec {
  LossKind kind = LossKind::ZeroOneTimes100;
  int num_labels = 2;
};

/// Throws DomainError when either label is outside {1..num_labels}.
double evaluate_loss(const LossSpec& spec, Label y_true, Label y_pred);

/// Elementwise evaluate_loss. Throws ShapeError on length mismatch.
std::vector<double> loss_vector(const LossSpec& spec, std::span<const Label> labels,
                                std::span<const Label> predictions);

// ---------------------------------------------------------------------------
// Feature storage
// ---------------------------------------------------------------------------

/// A single sample. `indices` is empty for dense rows; otherwise the row is
/// sparse and `indices[k]` (0-based, increasing) holds the column of `values[k]`.
struct RowView {
  std::span<const std::uint32_t> indices;
  std::span<const double> values;

  bool dense() const noexcept { return indices.empty(); }

  /// <row, w>. `w` must cover every column touched by the row.
  double dot(std::span<const double> w) const noexcept {
    double acc = 0.0;
    if (dense()) {
      for (std::size_t j = 0; j < values.size(); ++j) acc += values[j] * w[j];
    } else {
      for (std::size_t k = 0; k < values.size(); ++k) acc += values[k] * w[indices[k]];
    }
    return acc;
  }

  /// out += alpha * row
  void add_scaled(double alpha, std::span<double> out) const noexcept {
    if (dense()) {
      for (std::size_t j = 0; j < values.size(); ++j) out[j] += alpha * values[j];
    } else {
      for (std::size_t k = 0; k < values.size(); ++k) out[indices[k]] += alpha * values[k];
    }
  }

  template <class F>
  void for_each(F&& f) const {
    if (dense()) {
      for (std::size_t j = 0; j < values.size(); ++j) f(j, values[j]);
    } else {
      for (std::size_t k = 0; k < values.size(); ++k) f(std::size_t{indices[k]}, values[k]);
    }
  }
};

/// Row-major feature matrix with either dense or CSR storage. Immutable
/// after construction.
class FeatureMatrix {
 public:
  struct Entry {
    std::uint32_t index;  // 0-based column
    double value;
  };

  FeatureMatrix() = default;

  static FeatureMatrix dense(std::size_t rows, std::size_t cols, std::vector<double> values);
  static FeatureMatrix sparse(std::size_t cols, const std::vector<std::vector<Entry>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_sparse() const noexcept { return sparse_; }

  RowView row(std::size_t i) const noexcept;
  double at(std::size_t i, std::size_t j) const noexcept;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool sparse_ = false;
  std::vector<double> values_;
  std::vector<std::uint32_t> col_index_;  // sparse only
  std::vector<std::size_t> row_ptr_;      // sparse only, rows_ + 1 entries
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

class Dataset {
 public:
  Dataset() = default;

  /// Validates every invariant: n >= 1, d >= 1, labels in {1..num_labels},
  /// finite features. `raw_labels`, when non-empty, maps label k to
  /// raw_labels[k - 1] in the source file's label space.
  Dataset(FeatureMatrix features, std::vector<Label> labels, int num_labels,
          std::vector<double> raw_labels = {});

  const FeatureMatrix& features() const noexcept { return features_; }
  std::span<const Label> labels() const noexcept { return labels_; }
  Label label(std::size_t i) const noexcept { return labels_[i]; }
  RowView row(std::size_t i) const noexcept { return features_.row(i); }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  int num_labels() const noexcept { return num_labels_; }
  std::span<const double> raw_labels() const noexcept { return raw_labels_; }

  Dataset subset(std::span<const std::size_t> indices) const;

  /// Number of distinct labels that actually occur.
  int distinct_labels() const;

 private:
  FeatureMatrix features_;
  std::vector<Label> labels_;
  int num_labels_ = 0;
  std::vector<double> raw_labels_;
};

std::vector<double> loss_vector(const LossSpec& spec, const Dataset& data,
                                std::span<const Label> predictions);

// ---------------------------------------------------------------------------
// Linear parametrization
// ---------------------------------------------------------------------------

/// `rows` weight vectors of length `dim` (row-major) plus a bias vector.
/// Classifiers use one bias per row; the ordinal model stores a single
/// weight row and Y-1 thresholds in `biases`.
struct LinearScorer {
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  LinearScorer() = default;
  LinearScorer(std::size_t rows, std::size_t dim, std::size_t num_biases);

  std::span<const double> weight_row(std::size_t r) const noexcept {
    return {weights.data() + r * dim, dim};
  }
  std::span<double> weight_row(std::size_t r) noexcept { return {weights.data() + r * dim, dim}; }

  /// <w_r, x>
  double project(std::size_t r, const RowView& x) const noexcept { return x.dot(weight_row(r)); }
  /// <w_r, x> + b_r
  double activation(std::size_t r, const RowView& x) const noexcept {
    return project(r, x) + biases[r];
  }

  /// Throws NumericError on non-finite parameters, ShapeError on bad sizes.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

/// Seeded generator with a platform-independent stream. The engine is
/// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
/// derived draws below are computed here rather than through
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection; unbiased. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Box-Muller transform (cosine branch only).
  double normal();

  /// Fisher-Yates, walking from the back.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace selc
