#include "selc/serialization.hpp"

#include <istream>
#include <ostream>

#include "selc/errors.hpp"
#include "selc/text_format.hpp"

namespace selc {

namespace {

struct Body {
  int labels = 0;
  std::size_t dim = 0;
  double reg_const = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  LinearScorer scorer;
  std::optional<Normalizer> normalizer;
};

void write_numbers(std::ostream& out, std::string_view key, std::span<const double> values) {
  out << key;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

void write_body(std::ostream& out, int labels, const LinearScorer& scorer, double reg_const,
                double gap, std::size_t iterations, const Normalizer* normalizer) {
  out << "labels " << labels << '\n'
      << "dim " << scorer.dim << '\n'
      << "reg_const " << format_double(reg_const) << '\n'
      << "gap " << format_double(gap) << '\n'
      << "iterations " << iterations << '\n'
      << "rows " << scorer.rows << '\n';
  for (std::size_t r = 0; r < scorer.rows; ++r) write_numbers(out, "w", scorer.weight_row(r));
  write_numbers(out, "b", scorer.biases);
  if (normalizer) {
    write_numbers(out, "normalizer_mean", normalizer->mean);
    write_numbers(out, "normalizer_std", normalizer->stddev);
  }
  out << "end\n";
}

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

/// Sequential reader over non-comment lines.
class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : in_(in) {}

  std::size_t line() const noexcept { return line_no_; }

  /// Next record line split on whitespace; the first token is the key.
  std::vector<std::string_view> next() {
    while (std::getline(in_, buffer_)) {
      ++line_no_;
      const auto body = trim(buffer_);
      if (body.empty() || body.front() == '#') continue;
      return split_ws(body);
    }
    throw ParseError("unexpected end of record", line_no_);
  }

  std::vector<std::string_view> expect(std::string_view key, std::size_t min_values = 0) {
    auto tokens = next();
    if (tokens.front() != key) {
      throw ParseError("expected '" + std::string(key) + "', found '" + std::string(tokens.front()) + "'",
                       line_no_);
    }
    if (tokens.size() - 1 < min_values) {
      throw ParseError("'" + std::string(key) + "' is missing values", line_no_);
    }
    return tokens;
  }

  std::string word(std::string_view key) {
    const auto t = expect(key, 1);
    if (t.size() != 2) throw ParseError("'" + std::string(key) + "' takes one value", line_no_);
    return std::string(t[1]);
  }

  std::int64_t integer(std::string_view key) {
    const auto w = word(key);
    const auto v = try_parse_int(w);
    if (!v || *v < 0) throw ParseError("'" + std::string(key) + "' must be a nonnegative integer", line_no_);
    return *v;
  }

  double number(std::string_view key) {
    const auto w = word(key);
    const auto v = try_parse_double(w);
    if (!v) throw ParseError("'" + std::string(key) + "' must be a number", line_no_);
    return *v;
  }

  std::vector<double> numbers(const std::vector<std::string_view>& tokens) const {
    std::vector<double> out;
    out.reserve(tokens.size() - 1);
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto v = try_parse_double(tokens[k]);
      if (!v) throw ParseError("malformed number '" + std::string(tokens[k]) + "'", line_no_, k + 1);
      out.push_back(*v);
    }
    return out;
  }

  void header(std::string_view magic) {
    const auto t = next();
    if (t.size() != 2 || t[0] != magic) {
      throw ParseError("not a " + std::string(magic) + " record", line_no_);
    }
    const auto v = try_parse_int(t[1]);
    if (!v || *v != kModelFormatVersion) {
      throw ParseError("unsupported " + std::string(magic) + " version '" + std::string(t[1]) + "'",
                       line_no_);
    }
  }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_no_ = 0;
};

Body read_body(RecordReader& r) {
  Body b;
  b.labels = static_cast<int>(r.integer("labels"));
  b.dim = static_cast<std::size_t>(r.integer("dim"));
  b.reg_const = r.number("reg_const");
  b.gap = r.number("gap");
  b.iterations = static_cast<std::size_t>(r.integer("iterations"));
  const auto rows = static_cast<std::size_t>(r.integer("rows"));
  if (b.dim == 0 || b.labels < 1) throw ParseError("labels and dim must be positive", r.line());

  std::vector<std::vector<double>> weights;
  for (std::size_t k = 0; k < rows; ++k) {
    auto w = r.numbers(r.expect("w"));
    if (w.size() != b.dim) throw ParseError("weight row has the wrong length", r.line());
    weights.push_back(std::move(w));
  }
  const auto biases = r.numbers(r.expect("b"));
  b.scorer = LinearScorer(rows, b.dim, biases.size());
  for (std::size_t k = 0; k < rows; ++k) {
    std::copy(weights[k].begin(), weights[k].end(), b.scorer.weight_row(k).begin());
  }
  b.scorer.biases = biases;

  auto tokens = r.next();
  if (tokens.front() == "normalizer_mean") {
    Normalizer n;
    n.mean = r.numbers(tokens);
    n.stddev = r.numbers(r.expect("normalizer_std"));
    if (n.mean.size() != b.dim || n.stddev.size() != b.dim) {
      throw ParseError("normalizer length differs from dim", r.line());
    }
    b.normalizer = std::move(n);
    tokens = r.next();
  }
  if (tokens.size() != 1 || tokens.front() != "end") throw ParseError("expected 'end'", r.line());
  return b;
}

bool shape_matches(ModelKind kind, int labels, const LinearScorer& s) {
  const auto y = static_cast<std::size_t>(labels);
  switch (kind) {
    case ModelKind::LR:
    case ModelKind::MulticlassSVM: return labels >= 2 && s.rows == y && s.biases.size() == y;
    case ModelKind::BinarySVM: return labels == 2 && s.rows == 1 && s.biases.size() == 1;
    case ModelKind::SVOR: return labels >= 2 && s.rows == 1 && s.biases.size() == y - 1;
  }
  return false;
}

template <class Fn>
auto as_parse_error(RecordReader& r, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), r.line());
  }
}

}  // namespace

void save_classifier(std::ostream& out, const TrainedClassifier& model, const Normalizer* normalizer,
                     const std::vector<std::string>& comments) {
  model.scorer.validate();
  write_comments(out, comments);
  out << "selc-model " << kModelFormatVersion << '\n' << "kind " << to_string(model.kind) << '\n';
  write_body(out, model.num_labels, model.scorer, model.reg_const, model.relative_gap,
             model.iterations, normalizer);
}

StoredClassifier load_classifier(std::istream& in) {
  RecordReader r(in);
  r.header("selc-model");
  StoredClassifier stored;
  auto& m = stored.model;
  const auto kind = r.word("kind");
  m.kind = as_parse_error(r, [&] { return parse_model_kind(kind); });
  auto body = read_body(r);
  if (!shape_matches(m.kind, body.labels, body.scorer)) {
    throw ParseError("parameter shape does not match model kind " + kind, r.line());
  }
  m.num_labels = body.labels;
  m.scorer = std::move(body.scorer);
  m.reg_const = body.reg_const;
  m.relative_gap = body.gap;
  m.iterations = body.iterations;
  stored.normalizer = std::move(body.normalizer);
  return stored;
}

void save_score(std::ostream& out, const UncertaintyScore& score, const Normalizer* normalizer,
                const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "selc-score " << kModelFormatVersion << '\n'
      << "kind " << to_string(score.kind) << '\n'
      << "base_kind " << to_string(score.base_kind) << '\n';
  if (score.kind == ScoreKind::Baseline) {
    out << "end\n";
    return;
  }
  score.scorer.validate();
  write_body(out, static_cast<int>(score.scorer.rows), score.scorer, score.reg_const,
             score.relative_gap, score.iterations, normalizer);
}

StoredScore load_score(std::istream& in) {
  RecordReader r(in);
  r.header("selc-score");
  StoredScore stored;
  auto& s = stored.score;
  const auto kind = r.word("kind");
  s.kind = as_parse_error(r, [&] { return parse_score_kind(kind); });
  const auto base = r.word("base_kind");
  s.base_kind = as_parse_error(r, [&] { return parse_model_kind(base); });
  if (s.kind == ScoreKind::Baseline) {
    const auto t = r.next();
    if (t.size() != 1 || t.front() != "end") throw ParseError("expected 'end'", r.line());
    return stored;
  }
  auto body = read_body(r);
  const auto y = static_cast<std::size_t>(body.labels);
  if (body.scorer.rows != y || body.scorer.biases.size() != y) {
    throw ParseError("score needs one weight row and one bias per block", r.line());
  }
  s.scorer = std::move(body.scorer);
  s.reg_const = body.reg_const;
  s.relative_gap = body.gap;
  s.iterations = body.iterations;
  stored.normalizer = std::move(body.normalizer);
  return stored;
}

}  // namespace selc
