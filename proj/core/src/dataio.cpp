#include "selc/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "selc/errors.hpp"
#include "selc/numeric.hpp"
#include "selc/text_format.hpp"

namespace selc {

namespace {

struct LabelTable {
  std::vector<Label> labels;
  std::vector<double> raw;  // raw[k - 1] is the source value of label k
};

LabelTable remap_labels(const std::vector<double>& raw_values) {
  LabelTable t;
  t.raw = raw_values;
  std::sort(t.raw.begin(), t.raw.end());
  t.raw.erase(std::unique(t.raw.begin(), t.raw.end()), t.raw.end());
  t.labels.reserve(raw_values.size());
  for (double v : raw_values) {
    const auto pos = std::lower_bound(t.raw.begin(), t.raw.end(), v) - t.raw.begin();
    t.labels.push_back(static_cast<Label>(pos) + 1);
  }
  return t;
}

std::optional<double> parse_finite(std::string_view token) {
  const auto v = try_parse_double(token);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  return v;
}

}  // namespace

// --- LibSVM ------------------------------------------------------------------------

Dataset parse_libsvm(std::istream& in) {
  std::vector<std::vector<FeatureMatrix::Entry>> rows;
  std::vector<double> raw_labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tokens = split_ws(body);
    const auto label = parse_finite(tokens[0]);
    if (!label) throw ParseError("malformed label '" + std::string(tokens[0]) + "'", line_no);
    std::vector<FeatureMatrix::Entry> row;
    row.reserve(tokens.size() - 1);
    std::int64_t previous = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto tok = tokens[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected index:value, got '" + std::string(tok) + "'", line_no, k + 1);
      }
      const auto index = try_parse_int(tok.substr(0, colon));
      const auto value = parse_finite(tok.substr(colon + 1));
      if (!index || *index < 1 || *index > std::int64_t{0xFFFFFFFF} || !value) {
        throw ParseError("malformed feature '" + std::string(tok) + "'", line_no, k + 1);
      }
      if (*index <= previous) {
        throw ParseError("feature indices must be strictly increasing", line_no, k + 1);
      }
      previous = *index;
      row.push_back({static_cast<std::uint32_t>(*index - 1), *value});
      max_index = std::max(max_index, static_cast<std::size_t>(*index));
    }
    rows.push_back(std::move(row));
    raw_labels.push_back(*label);
  }
  if (rows.empty()) throw ParseError("no samples in LibSVM input", line_no);
  auto table = remap_labels(raw_labels);
  const int y = static_cast<int>(table.raw.size());
  return Dataset(FeatureMatrix::sparse(std::max<std::size_t>(max_index, 1), rows),
                 std::move(table.labels), y, std::move(table.raw));
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  const auto raw = data.raw_labels();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Label y = data.label(i);
    out << (raw.empty() ? std::to_string(y) : format_double(raw[static_cast<std::size_t>(y - 1)]));
    data.row(i).for_each([&](std::size_t j, double v) {
      if (v != 0.0) out << ' ' << (j + 1) << ':' << format_double(v);
    });
    out << '\n';
  }
}

std::string serialize_libsvm(const Dataset& data) {
  std::ostringstream out;
  write_libsvm(out, data);
  return out.str();
}

// --- CSV ---------------------------------------------------------------------------

Dataset parse_csv(std::istream& in, int label_column) {
  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    lines.push_back(line);
    line_numbers.push_back(line_no);
  }
  if (lines.empty()) throw ParseError("no rows in CSV input", line_no);

  std::size_t first = 0;
  {
    const auto cells = split(lines[0], ',');
    const bool numeric = std::all_of(cells.begin(), cells.end(),
                                     [](std::string_view c) { return parse_finite(c).has_value(); });
    if (!numeric) first = 1;
  }
  if (first >= lines.size()) throw ParseError("CSV input has a header but no data rows", line_no);

  const std::size_t cols = split(lines[first], ',').size();
  if (cols < 2) throw ParseError("CSV rows need a label and at least one feature", line_numbers[first]);
  const long resolved = label_column < 0 ? static_cast<long>(cols) + label_column : label_column;
  if (resolved < 0 || resolved >= static_cast<long>(cols)) {
    throw ConfigError("label column " + std::to_string(label_column) + " is outside the " +
                      std::to_string(cols) + " CSV columns");
  }
  const auto label_at = static_cast<std::size_t>(resolved);

  const std::size_t n = lines.size() - first;
  const std::size_t d = cols - 1;
  std::vector<double> values;
  values.reserve(n * d);
  std::vector<double> raw_labels;
  raw_labels.reserve(n);
  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    if (cells.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " columns, found " +
                           std::to_string(cells.size()),
                       line_numbers[r]);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto v = parse_finite(cells[c]);
      if (!v) {
        throw ParseError("non-numeric cell '" + std::string(trim(cells[c])) + "'", line_numbers[r],
                         c + 1);
      }
      if (c == label_at) {
        raw_labels.push_back(*v);
      } else {
        values.push_back(*v);
      }
    }
  }
  auto table = remap_labels(raw_labels);
  const int y = static_cast<int>(table.raw.size());
  return Dataset(FeatureMatrix::dense(n, d, std::move(values)), std::move(table.labels), y,
                 std::move(table.raw));
}

// --- splits ------------------------------------------------------------------------

std::array<std::size_t, kSplitCount> split_sizes(std::size_t n,
                                                 const std::array<double, kSplitCount>& ratios) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("split ratios must be finite and >= 0");
    total += r;
  }
  if (!(total > 0.0)) throw DomainError("split ratios must not all be zero");
  if (n < kSplitCount) throw SizeError("at least 5 samples are needed for a five-way split");

  std::array<std::size_t, kSplitCount> sizes{};
  std::array<double, kSplitCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < kSplitCount; ++k) {
    const double quota = static_cast<double>(n) * ratios[k] / total;
    sizes[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = quota - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<std::size_t, kSplitCount> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % kSplitCount]];

  for (std::size_t k = 0; k < kSplitCount; ++k) {
    if (ratios[k] > 0.0 && sizes[k] == 0) {
      throw SizeError(std::to_string(n) + " samples leave split " + std::to_string(k + 1) + " empty");
    }
  }
  return sizes;
}

SplitIndices make_splits(std::size_t n, const SplitPlan& plan, Rng& rng) {
  const auto sizes = split_sizes(n, plan.ratios);
  const auto perm = rng.permutation(n);
  SplitIndices out;
  std::size_t at = 0;
  for (std::size_t k = 0; k < kSplitCount; ++k) {
    out[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                  perm.begin() + static_cast<std::ptrdiff_t>(at + sizes[k]));
    std::sort(out[k].begin(), out[k].end());
    at += sizes[k];
  }
  return out;
}

SplitIndices make_splits(std::size_t n, const SplitPlan& plan) {
  if (plan.replicate < 1) throw DomainError("replicate index is 1-based");
  Rng rng(plan.seed + static_cast<std::uint64_t>(plan.replicate - 1));
  return make_splits(n, plan, rng);
}

// --- normalization -----------------------------------------------------------------

Normalizer fit_normalizer(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw SizeError("cannot fit a normalizer on zero samples");
  const std::size_t d = data.dim();
  const double m = static_cast<double>(indices.size());
  std::vector<CompensatedSum> sums(d);
  for (std::size_t i : indices) {
    data.row(i).for_each([&](std::size_t j, double v) { sums[j] += v; });
  }
  Normalizer norm;
  norm.mean.resize(d);
  norm.stddev.resize(d);
  for (std::size_t j = 0; j < d; ++j) norm.mean[j] = sums[j].value() / m;

  // Second pass on centered values; absent sparse entries are zeros.
  std::vector<CompensatedSum> sq(d);
  std::vector<std::size_t> present(d, 0);
  for (std::size_t i : indices) {
    data.row(i).for_each([&](std::size_t j, double v) {
      const double c = v - norm.mean[j];
      sq[j] += c * c;
      ++present[j];
    });
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double zeros = m - static_cast<double>(present[j]);
    sq[j] += zeros * norm.mean[j] * norm.mean[j];
    norm.stddev[j] = std::sqrt(sq[j].value() / m);
  }
  return norm;
}

Normalizer fit_normalizer(const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_normalizer(data, all);
}

Dataset apply_normalizer(const Normalizer& norm, const Dataset& data) {
  const std::size_t d = norm.dim();
  if (norm.stddev.size() != d) throw ShapeError("normalizer mean and std differ in length");
  if (data.dim() > d) {
    throw ShapeError("dataset has " + std::to_string(data.dim()) + " features, normalizer " +
                     std::to_string(d));
  }
  // Sparse inputs may declare fewer columns than the fitting data; the
  // missing trailing columns are zeros.
  std::vector<double> values(data.size() * d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double* out = values.data() + i * d;
    std::fill(out, out + d, 0.0);
    data.row(i).for_each([&](std::size_t j, double v) { out[j] = v; });
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = (out[j] - norm.mean[j]) / std::max(norm.stddev[j], kStdFloor);
    }
  }
  std::vector<Label> labels(data.labels().begin(), data.labels().end());
  std::vector<double> raw(data.raw_labels().begin(), data.raw_labels().end());
  return Dataset(FeatureMatrix::dense(data.size(), d, std::move(values)), std::move(labels),
                 data.num_labels(), std::move(raw));
}

// --- ordinal binning ---------------------------------------------------------------

OrdinalBinning ordinal_binning(std::span<const double> values, int num_bins) {
  if (num_bins < 2) throw DomainError("ordinal binning needs at least two bins");
  const std::size_t n = values.size();
  const auto y = static_cast<std::size_t>(num_bins);
  if (n < y) throw SizeError("fewer values than bins");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("ordinal targets must be finite");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  OrdinalBinning out;
  out.edges.reserve(y - 1);
  for (std::size_t k = 1; k < y; ++k) {
    const std::size_t rank = (k * n + y - 1) / y;  // ceil(k n / Y)
    out.edges.push_back(sorted[rank - 1]);
  }
  const auto distinct = static_cast<std::size_t>(
      std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  out.too_few_distinct = distinct < y;

  out.labels.reserve(n);
  for (double v : values) {
    const auto above = std::lower_bound(out.edges.begin(), out.edges.end(), v) - out.edges.begin();
    out.labels.push_back(static_cast<Label>(above) + 1);
  }
  return out;
}

// --- manifests ---------------------------------------------------------------------

namespace {

std::string_view format_name(DataFormat f) { return f == DataFormat::Csv ? "csv" : "libsvm"; }

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");

  Manifest m;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
        m.name = value.get<std::string>();
      } else if (key == "source") {
        m.source = value.get<std::string>();
      } else if (key == "format") {
        const auto f = value.get<std::string>();
        if (f == "libsvm") {
          m.format = DataFormat::LibSvm;
        } else if (f == "csv") {
          m.format = DataFormat::Csv;
        } else {
          throw ConfigError("manifest format must be 'libsvm' or 'csv', got '" + f + "'");
        }
      } else if (key == "label_column") {
        m.label_column = value.get<int>();
      } else if (key == "ratios") {
        const auto r = value.get<std::vector<double>>();
        if (r.size() != kSplitCount) throw ConfigError("manifest ratios need exactly 5 entries");
        std::copy(r.begin(), r.end(), m.split.ratios.begin());
      } else if (key == "seed") {
        m.split.seed = value.get<std::uint64_t>();
      } else if (key == "replicates") {
        m.replicates = value.get<int>();
      } else if (key == "ordinal_bins") {
        m.ordinal_bins = value.get<int>();
      } else {
        throw ConfigError("unknown manifest key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest field has the wrong type: ") + e.what());
  }
  if (m.source.empty()) throw ConfigError("manifest is missing 'source'");
  if (m.replicates < 1) throw ConfigError("manifest replicates must be >= 1");
  if (m.ordinal_bins < 0 || m.ordinal_bins == 1) throw ConfigError("ordinal_bins must be 0 or >= 2");
  if (m.name.empty()) m.name = m.source.stem().string();
  if (m.source.is_relative() && !base_dir.empty()) m.source = base_dir / m.source;
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["source"] = m.source.generic_string();
  j["format"] = format_name(m.format);
  j["label_column"] = m.label_column;
  j["ratios"] = std::vector<double>(m.split.ratios.begin(), m.split.ratios.end());
  j["seed"] = m.split.seed;
  j["replicates"] = m.replicates;
  j["ordinal_bins"] = m.ordinal_bins;
  return j.dump(2) + "\n";
}

Dataset load_dataset(const Manifest& m) {
  std::ifstream in(m.source);
  if (!in) throw IoError("cannot open dataset " + m.source.string());
  Dataset data = m.format == DataFormat::Csv ? parse_csv(in, m.label_column) : parse_libsvm(in);
  if (m.ordinal_bins == 0) return data;

  const auto raw = data.raw_labels();
  std::vector<double> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    targets[i] = raw[static_cast<std::size_t>(data.label(i) - 1)];
  }
  auto binning = ordinal_binning(targets, m.ordinal_bins);
  std::vector<double> bin_ids(static_cast<std::size_t>(m.ordinal_bins));
  std::iota(bin_ids.begin(), bin_ids.end(), 1.0);
  return Dataset(data.features(), std::move(binning.labels), m.ordinal_bins, std::move(bin_ids));
}

Dataset load_dataset_file(const std::filesystem::path& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  if (path.extension() == ".csv") return parse_csv(in, label_column);
  return parse_libsvm(in);
}

}  // namespace selc
