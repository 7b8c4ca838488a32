#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "selc/core.hpp"

namespace selc {

// --- text formats -----------------------------------------------------------------

/// `<label> <index>:<value> ...` with 1-based, strictly increasing indices.
/// Blank lines and lines starting with '#' are skipped. Raw labels are
/// remapped to {1..Y} in sorted order and the table is kept in the Dataset.
/// Throws ParseError with the offending line number.
Dataset parse_libsvm(std::istream& in);

/// Canonical LibSVM text: raw labels, nonzero entries only, shortest
/// round-trip decimals.
void write_libsvm(std::ostream& out, const Dataset& data);
std::string serialize_libsvm(const Dataset& data);

/// Numeric CSV with an optional header (detected when the first line has a
/// non-numeric cell). `label_column` is 0-based; negative values count from
/// the end, so -1 is the last column. Throws ParseError with row/column.
Dataset parse_csv(std::istream& in, int label_column = -1);

// --- splits -------------------------------------------------------------------------

enum class Split : std::size_t { Trn1 = 0, Val1, Trn2, Val2, Tst };
inline constexpr std::size_t kSplitCount = 5;

struct SplitPlan {
  std::array<double, kSplitCount> ratios{30, 10, 30, 10, 20};
  std::uint64_t seed = 0;
  int replicate = 1;  // 1-based; replicate r draws from seed + r - 1
};

using SplitIndices = std::array<std::vector<std::size_t>, kSplitCount>;

/// Largest-remainder apportionment of n over the ratios; ties in the
/// remainder go to the earlier split. Throws SizeError when a split with a
/// nonzero ratio would be empty, DomainError on invalid ratios.
std::array<std::size_t, kSplitCount> split_sizes(std::size_t n,
                                                 const std::array<double, kSplitCount>& ratios);

/// Shuffles {0..n-1} with `rng` and slices by split_sizes. Each index list
/// is returned in increasing order.
SplitIndices make_splits(std::size_t n, const SplitPlan& plan, Rng& rng);

/// As above with Rng(plan.seed + plan.replicate - 1).
SplitIndices make_splits(std::size_t n, const SplitPlan& plan);

// --- normalization --------------------------------------------------------------------

inline constexpr double kStdFloor = 1e-12;

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation

  std::size_t dim() const noexcept { return mean.size(); }
};

/// Throws SizeError on an empty index list.
Normalizer fit_normalizer(const Dataset& data, std::span<const std::size_t> indices);
Normalizer fit_normalizer(const Dataset& data);

/// (x - mean) / max(std, kStdFloor), returned as a dense dataset.
Dataset apply_normalizer(const Normalizer& norm, const Dataset& data);

// --- ordinal targets ------------------------------------------------------------------

struct OrdinalBinning {
  std::vector<Label> labels;
  std::vector<double> edges;      // Y - 1 upper bin edges
  bool too_few_distinct = false;  // fewer distinct values than bins
};

/// Edges at the empirical k/Y quantiles, edge_k = sorted[ceil(k n / Y) - 1];
/// a value equal to an edge falls into the lower bin.
OrdinalBinning ordinal_binning(std::span<const double> values, int num_bins);

// --- manifests --------------------------------------------------------------------------

enum class DataFormat { LibSvm, Csv };

struct Manifest {
  std::string name;
  std::filesystem::path source;  // resolved against the manifest's directory
  DataFormat format = DataFormat::LibSvm;
  int label_column = -1;
  SplitPlan split;
  int replicates = 5;
  int ordinal_bins = 0;  // > 0: bin raw targets into this many ordinal labels
};

/// JSON object with keys name, source, format ("libsvm" | "csv"),
/// label_column, ratios, seed, replicates, ordinal_bins. Unknown keys are
/// rejected with ConfigError; malformed JSON raises ParseError.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const Manifest& manifest);

/// Reads the source file named by the manifest and applies ordinal binning
/// when requested. Throws IoError when the file cannot be opened.
Dataset load_dataset(const Manifest& manifest);

/// Opens `path` by extension: .csv goes to parse_csv, anything else to
/// parse_libsvm.
Dataset load_dataset_file(const std::filesystem::path& path, int label_column = -1);

}  // namespace selc
