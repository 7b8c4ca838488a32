// selc: train classifiers and uncertainty scores, evaluate them, solve
// reject-option models and run the benchmark protocol.

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selc/bench.hpp"
#include "selc/dataio.hpp"
#include "selc/errors.hpp"
#include "selc/metrics.hpp"
#include "selc/models.hpp"
#include "selc/numeric.hpp"
#include "selc/rejection.hpp"
#include "selc/scores.hpp"
#include "selc/serialization.hpp"
#include "selc/text_format.hpp"

#ifndef SELC_VERSION
#define SELC_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitParse = 3,
  kExitNumeric = 4,
  kExitIo = 5,
};

// --- shared plumbing ------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 1;
};

/// Provenance line written at the top of every output file. The hash covers
/// the settings that determine the content, not where it is written.
std::string provenance(std::uint64_t seed, const std::string& settings) {
  return std::string("selc ") + SELC_VERSION + " seed=" + std::to_string(seed) +
         " config=" + selc::hex64(selc::fnv1a64(settings));
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw selc::IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw selc::IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw selc::IoError("cannot open " + path.string());
  return in;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw selc::IoError("failed writing " + path.string());
}

std::vector<double> parse_grid(const std::string& text, const char* what) {
  auto grid = selc::parse_double_list(text);
  if (grid.empty()) throw selc::ConfigError(std::string(what) + " is empty");
  for (double c : grid) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw selc::ConfigError(std::string(what) + " values must be finite and >= 0");
    }
  }
  return grid;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += selc::format_double(values[i]);
  }
  return out;
}

/// "LR", "SVM" (binary when the data has two labels), "SVOR", or a full
/// model kind name.
selc::ModelKind parse_model_option(const std::string& name) {
  if (name == "SVM") return selc::ModelKind::MulticlassSVM;
  return selc::parse_model_kind(name);
}

/// Method names accepted on the command line and in bench configs.
selc::ScoreKind parse_method(std::string_view name) {
  if (name == "MCP" || name == "MARGIN" || name == "Baseline") return selc::ScoreKind::Baseline;
  return selc::parse_score_kind(name);
}

// --- dataset selection ----------------------------------------------------------

struct DataOptions {
  std::string manifest;
  std::string data;
  int label_column = -1;
  std::string ratios;
  int replicate = 1;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--manifest", o.manifest, "dataset manifest (JSON)");
  cmd->add_option("--data", o.data, "dataset file (.csv or LibSVM)");
  cmd->add_option("--label-column", o.label_column, "CSV label column, negative counts from the end")
      ->default_val(-1);
  cmd->add_option("--ratios", o.ratios, "Trn1/Val1/Trn2/Val2/Tst ratios, e.g. 30,10,30,10,20");
  cmd->add_option("--replicate", o.replicate, "split replicate (1-based)")->default_val(1);
}

struct Prepared {
  selc::Manifest manifest;
  selc::Dataset data;
  selc::SplitIndices splits;
  std::uint64_t seed = 0;
  std::string settings;  // canonical description for the provenance hash
};

Prepared prepare_data(const DataOptions& o, const Common& common) {
  if (o.manifest.empty() == o.data.empty()) {
    throw selc::ConfigError("give exactly one of --manifest or --data");
  }
  Prepared p;
  if (!o.manifest.empty()) {
    p.manifest = selc::load_manifest(o.manifest);
  } else {
    p.manifest.source = o.data;
    p.manifest.name = fs::path(o.data).stem().string();
    p.manifest.format = fs::path(o.data).extension() == ".csv" ? selc::DataFormat::Csv
                                                                : selc::DataFormat::LibSvm;
    p.manifest.label_column = o.label_column;
  }
  if (!o.ratios.empty()) {
    const auto r = selc::parse_double_list(o.ratios);
    if (r.size() != selc::kSplitCount) throw selc::ConfigError("--ratios needs five values");
    std::copy(r.begin(), r.end(), p.manifest.split.ratios.begin());
  }
  if (common.seed_given) p.manifest.split.seed = common.seed;
  if (o.replicate < 1) throw selc::ConfigError("--replicate is 1-based");
  p.manifest.split.replicate = o.replicate;
  p.seed = p.manifest.split.seed;
  p.data = selc::load_dataset(p.manifest);
  p.splits = selc::make_splits(p.data.size(), p.manifest.split);
  p.settings = "data=" + p.manifest.source.generic_string() +
               " labelcol=" + std::to_string(p.manifest.label_column) +
               " bins=" + std::to_string(p.manifest.ordinal_bins) +
               " ratios=" + join({p.manifest.split.ratios.begin(), p.manifest.split.ratios.end()}) +
               " replicate=" + std::to_string(o.replicate);
  return p;
}

const std::vector<std::size_t>& split_of(const Prepared& p, selc::Split s) {
  return p.splits[static_cast<std::size_t>(s)];
}

selc::Dataset normalized(const std::optional<selc::Normalizer>& norm, const selc::Dataset& data) {
  return norm ? selc::apply_normalizer(*norm, data) : data;
}

template <class T>
std::vector<T> gather(const std::vector<T>& values, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

selc::StoredClassifier read_model(const std::string& path) {
  auto in = open_input(path);
  return selc::load_classifier(in);
}

selc::StoredScore read_score(const std::string& path) {
  auto in = open_input(path);
  return selc::load_score(in);
}

/// (score, loss) pairs from a two-column CSV with an optional header.
void read_pairs(const std::string& path, std::vector<double>& scores, std::vector<double>& losses) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = selc::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto cells = selc::split(body, ',');
    const auto s = cells.size() == 2 ? selc::try_parse_double(cells[0]) : std::nullopt;
    const auto l = cells.size() == 2 ? selc::try_parse_double(cells[1]) : std::nullopt;
    if (!s || !l) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw selc::ParseError("expected 'score,loss'", line_no);
    }
    first = false;
    scores.push_back(*s);
    losses.push_back(*l);
  }
  if (scores.empty()) throw selc::ParseError("no score,loss pairs found", line_no);
}

/// Uncertainty and loss on the chosen samples for a model and an optional
/// learned score.
struct ScoredSamples {
  std::vector<double> scores;
  std::vector<double> losses;
  std::string settings;
};

ScoredSamples score_samples(const Prepared& p, const std::string& model_path,
                            const std::string& score_path, const std::string& split) {
  const auto model = read_model(model_path);
  const auto view1 = normalized(model.normalizer, p.data);
  const auto predictions = selc::predict_all(model.model, view1);
  const auto loss = selc::protocol_loss(model.model.kind, model.model.num_labels);
  const auto losses = selc::loss_vector(loss, view1, predictions);

  std::vector<std::size_t> idx;
  if (split == "all") {
    idx.resize(p.data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  } else {
    static const std::map<std::string, selc::Split> names{
        {"trn1", selc::Split::Trn1}, {"val1", selc::Split::Val1}, {"trn2", selc::Split::Trn2},
        {"val2", selc::Split::Val2}, {"tst", selc::Split::Tst}};
    const auto it = names.find(split);
    if (it == names.end()) throw selc::ConfigError("unknown split '" + split + "'");
    idx = split_of(p, it->second);
  }

  ScoredSamples out;
  out.losses = gather(losses, idx);
  if (score_path.empty()) {
    for (std::size_t i : idx) out.scores.push_back(selc::baseline_uncertainty(model.model, view1.row(i)));
  } else {
    const auto score = read_score(score_path);
    if (score.score.base_kind != model.model.kind) {
      throw selc::ConfigError("score was trained for a " + std::string(selc::to_string(score.score.base_kind)) +
                              " model, not " + std::string(selc::to_string(model.model.kind)));
    }
    if (score.score.kind == selc::ScoreKind::Baseline) {
      for (std::size_t i : idx) out.scores.push_back(selc::baseline_uncertainty(model.model, view1.row(i)));
    } else {
      const auto view2 = normalized(score.normalizer, p.data).subset(idx);
      out.scores = selc::score_dataset(score.score, view2, gather(predictions, idx));
    }
  }
  out.settings = "model=" + model_path + " score=" + score_path + " split=" + split;
  return out;
}

// --- train ----------------------------------------------------------------------

struct TrainOptions {
  DataOptions data;
  std::string model = "LR";
  std::string grid = "1,10,100,1000";
  std::string out;
  std::string report;
};

int cmd_train(const TrainOptions& o, const Common& common) {
  const auto kind = parse_model_option(o.model);
  const auto grid = parse_grid(o.grid, "--C-grid");
  const auto p = prepare_data(o.data, common);
  const auto norm = selc::fit_normalizer(p.data, split_of(p, selc::Split::Trn1));
  const auto view = selc::apply_normalizer(norm, p.data);
  const auto trn = view.subset(split_of(p, selc::Split::Trn1));
  const auto val = view.subset(split_of(p, selc::Split::Val1));
  const auto loss = selc::protocol_loss(kind, p.data.num_labels());

  std::ostringstream report;
  std::optional<selc::TrainedClassifier> best;
  double best_risk = 0.0;
  for (double c : grid) {
    auto model = selc::train_classifier(kind, trn, c);
    const auto losses = selc::loss_vector(loss, val, selc::predict_all(model, val));
    const double risk = selc::compensated_sum(losses) / static_cast<double>(losses.size());
    report << "C=" << selc::format_double(c) << " val_risk=" << selc::format_double(risk)
           << " gap=" << selc::format_double(model.relative_gap) << " iterations=" << model.iterations
           << '\n';
    if (!best || risk < best_risk) {
      best_risk = risk;
      best = std::move(model);
    }
  }
  report << "chosen C=" << selc::format_double(best->reg_const)
         << " kind=" << selc::to_string(best->kind)
         << " objective=" << selc::format_double(selc::training_objective(*best, trn))
         << " gap=" << selc::format_double(best->relative_gap) << " val_risk=" << selc::format_double(best_risk)
         << '\n';

  const std::string settings = "train model=" + o.model + " grid=" + join(grid) + " " + p.settings;
  const std::string header = provenance(p.seed, settings);
  if (!o.out.empty()) {
    auto out = open_output(o.out);
    selc::save_classifier(out, *best, &norm, {header});
    finish_output(out, o.out);
  }
  if (!o.report.empty()) {
    auto out = open_output(o.report);
    out << "# " << header << '\n' << report.str();
    finish_output(out, o.report);
  }
  std::cout << report.str();
  return kExitOk;
}

// --- score ----------------------------------------------------------------------

struct ScoreOptions {
  DataOptions data;
  std::string model;
  std::string method = "SELE";
  std::string grid = "0,1,10,100,1000";
  std::string out;
};

int cmd_score(const ScoreOptions& o, const Common& common) {
  const auto method = selc::parse_score_kind(o.method);
  if (method == selc::ScoreKind::Baseline) throw selc::ConfigError("the baseline score is not trained");
  const auto grid = parse_grid(o.grid, "--C-grid");
  const auto p = prepare_data(o.data, common);
  const auto stored = read_model(o.model);
  const auto& base = stored.model;
  if (method == selc::ScoreKind::TCP && base.kind != selc::ModelKind::LR) {
    throw selc::ConfigError("TCP needs an LR model, got " + std::string(selc::to_string(base.kind)));
  }
  const auto view1 = normalized(stored.normalizer, p.data);
  const auto predictions = selc::predict_all(base, view1);
  const auto losses = selc::loss_vector(selc::protocol_loss(base.kind, base.num_labels), view1, predictions);

  const auto& trn2 = split_of(p, selc::Split::Trn2);
  const auto& val2 = split_of(p, selc::Split::Val2);
  const auto norm2 = selc::fit_normalizer(p.data, trn2);
  const auto view2 = selc::apply_normalizer(norm2, p.data);
  const auto trn = view2.subset(trn2);
  const auto val = view2.subset(val2);
  const auto trn_pred = gather(predictions, trn2);
  const auto val_pred = gather(predictions, val2);
  const auto val_losses = gather(losses, val2);
  std::vector<double> targets;
  if (method == selc::ScoreKind::TCP) {
    for (std::size_t i : trn2) {
      targets.push_back(selc::lr_posterior(base, view1.row(i))[static_cast<std::size_t>(view1.label(i) - 1)]);
    }
  } else {
    targets = gather(losses, trn2);
  }

  std::optional<selc::UncertaintyScore> best;
  double best_aurc = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    selc::UncertaintyScore score;
    if (method == selc::ScoreKind::SELE) {
      selc::Rng rng(selc::stream_seed(p.seed, o.data.replicate, g));
      score = selc::fit_sele_score(base.kind, base.num_labels, trn, trn_pred, targets, grid[g], rng);
    } else {
      score = selc::fit_regression_score(method, base.kind, base.num_labels, trn, trn_pred, targets, grid[g]);
    }
    const double a = selc::aurc(selc::score_dataset(score, val, val_pred), val_losses);
    std::cout << "C=" << selc::format_double(grid[g]) << " val_aurc=" << selc::format_double(a) << '\n';
    if (!best || a < best_aurc) {
      best_aurc = a;
      best = std::move(score);
    }
  }
  std::cout << "chosen C=" << selc::format_double(best->reg_const) << " method=" << o.method
            << " val_aurc=" << selc::format_double(best_aurc) << '\n';

  if (!o.out.empty()) {
    const std::string settings = "score method=" + o.method + " model=" + o.model +
                                 " grid=" + join(grid) + " " + p.settings;
    auto out = open_output(o.out);
    selc::save_score(out, *best, &norm2, {provenance(p.seed, settings)});
    finish_output(out, o.out);
  }
  return kExitOk;
}

// --- eval -----------------------------------------------------------------------

struct EvalOptions {
  DataOptions data;
  std::string model;
  std::string score;
  std::string pairs;
  std::string split = "tst";
  std::string curve;
  std::string out;
};

int cmd_eval(const EvalOptions& o, const Common& common) {
  ScoredSamples s;
  std::uint64_t seed = common.seed;
  if (!o.pairs.empty()) {
    if (!o.model.empty()) throw selc::ConfigError("give either --pairs or --model, not both");
    read_pairs(o.pairs, s.scores, s.losses);
    s.settings = "pairs=" + o.pairs;
  } else {
    if (o.model.empty()) throw selc::ConfigError("eval needs --model or --pairs");
    const auto p = prepare_data(o.data, common);
    seed = p.seed;
    s = score_samples(p, o.model, o.score, o.split);
    s.settings += " " + p.settings;
  }
  const auto curve = selc::rc_curve(s.scores, s.losses);
  std::ostringstream metrics;
  metrics << "samples " << s.scores.size() << '\n'
          << "aurc " << selc::format_double(selc::aurc(s.scores, s.losses)) << '\n'
          << "r_at_90 " << selc::format_double(selc::risk_at_coverage(curve, 0.9)) << '\n'
          << "r_at_100 " << selc::format_double(selc::risk_at_coverage(curve, 1.0)) << '\n';
  const std::string header = provenance(seed, "eval " + s.settings);
  if (!o.curve.empty()) {
    auto out = open_output(o.curve);
    out << "# " << header << '\n';
    selc::write_rc_curve_csv(out, curve);
    finish_output(out, o.curve);
  }
  if (!o.out.empty()) {
    auto out = open_output(o.out);
    out << "# " << header << '\n' << metrics.str();
    finish_output(out, o.out);
  }
  std::cout << metrics.str();
  return kExitOk;
}

// --- reject ---------------------------------------------------------------------

struct RejectOptions {
  DataOptions data;
  std::string type;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<double> omega;
  std::string atoms;
  std::string pairs;
  std::string model;
  std::string score;
  std::string split = "tst";
  std::string out;
};

selc::DiscreteRiskDistribution parse_atoms(const std::string& text) {
  std::vector<selc::RiskAtom> atoms;
  for (auto item : selc::split(text, ',')) {
    item = selc::trim(item);
    const auto colon = item.find(':');
    const auto r = colon == std::string_view::npos ? std::nullopt : selc::try_parse_double(item.substr(0, colon));
    const auto m = colon == std::string_view::npos ? std::nullopt : selc::try_parse_double(item.substr(colon + 1));
    if (!r || !m) throw selc::ConfigError("--atoms expects risk:mass pairs, got '" + std::string(item) + "'");
    atoms.push_back({*r, *m});
  }
  try {
    return selc::DiscreteRiskDistribution(std::move(atoms));
  } catch (const selc::DomainError& e) {
    throw selc::ConfigError(std::string("invalid --atoms: ") + e.what());
  }
}

int cmd_reject(const RejectOptions& o, const Common& common) {
  const int sources = !o.atoms.empty() + !o.pairs.empty() + !o.model.empty();
  if (sources != 1) throw selc::ConfigError("give exactly one of --atoms, --pairs or --model");

  std::uint64_t seed = common.seed;
  std::string settings = "reject type=" + o.type;
  std::optional<selc::DiscreteRiskDistribution> dist;
  if (!o.atoms.empty()) {
    dist = parse_atoms(o.atoms);
    settings += " atoms=" + o.atoms;
  } else {
    ScoredSamples s;
    if (!o.pairs.empty()) {
      read_pairs(o.pairs, s.scores, s.losses);
      s.settings = "pairs=" + o.pairs;
    } else {
      const auto p = prepare_data(o.data, common);
      seed = p.seed;
      s = score_samples(p, o.model, o.score, o.split);
      s.settings += " " + p.settings;
    }
    dist = selc::empirical_risk_distribution(s.scores, s.losses).distribution;
    settings += " " + s.settings;
  }

  std::ostringstream text;
  auto print_selector = [&](const selc::RandomizedSelector& sel, std::optional<double> cost) {
    const auto ev = selc::evaluate_selector(*dist, sel, cost);
    text << "threshold " << selc::format_double(sel.threshold) << '\n'
         << "accept_prob " << selc::format_double(sel.accept_prob) << '\n'
         << "coverage " << selc::format_double(ev.coverage) << '\n'
         << "selective_risk "
         << (ev.selective_risk ? selc::format_double(*ev.selective_risk) : std::string("undefined")) << '\n';
    if (ev.expected_cost) text << "expected_cost " << selc::format_double(*ev.expected_cost) << '\n';
  };

  if (o.type == "cost") {
    if (!o.epsilon) throw selc::ConfigError("cost-based rejection needs --epsilon");
    if (!(*o.epsilon >= 0.0)) throw selc::ConfigError("--epsilon must be >= 0");
    settings += " epsilon=" + selc::format_double(*o.epsilon);
    text << "model cost-based\nepsilon " << selc::format_double(*o.epsilon) << '\n';
    print_selector(selc::solve_cost_based(*dist, *o.epsilon), *o.epsilon);
  } else if (o.type == "bounded-improvement") {
    if (!o.lambda) throw selc::ConfigError("bounded-improvement rejection needs --lambda");
    if (!(*o.lambda > 0.0) || !std::isfinite(*o.lambda)) throw selc::ConfigError("--lambda must be > 0");
    settings += " lambda=" + selc::format_double(*o.lambda);
    const auto sol = selc::solve_bounded_improvement(*dist, *o.lambda);
    text << "model bounded-improvement\nlambda " << selc::format_double(*o.lambda) << '\n';
    print_selector(sol.selector, std::nullopt);
    text << "status " << (sol.status == selc::SolveStatus::Ok ? "ok" : "infeasible-target") << '\n';
  } else if (o.type == "bounded-coverage") {
    if (!o.omega) throw selc::ConfigError("bounded-coverage rejection needs --omega");
    if (!(*o.omega > 0.0 && *o.omega <= 1.0)) throw selc::ConfigError("--omega must lie in (0, 1]");
    settings += " omega=" + selc::format_double(*o.omega);
    text << "model bounded-coverage\nomega " << selc::format_double(*o.omega) << '\n';
    print_selector(selc::solve_bounded_coverage(*dist, *o.omega), std::nullopt);
  } else {
    throw selc::ConfigError("--type must be cost, bounded-improvement or bounded-coverage");
  }

  if (!o.out.empty()) {
    auto out = open_output(o.out);
    out << "# " << provenance(seed, settings) << '\n' << text.str();
    finish_output(out, o.out);
  }
  std::cout << text.str();
  return kExitOk;
}

// --- bench ----------------------------------------------------------------------

// Bench config grammar: one `key = value` per line, '#' starts a comment.
//   datasets         comma-separated manifest paths, relative to the config
//   model            LR | SVM | SVOR
//   methods          comma-separated from MCP/MARGIN, SELE, REG, TCP
//   classifier_grid  comma-separated C values      (default 1,10,100,1000)
//   score_grid       comma-separated C values      (default 0,1,10,100,1000)
//   replicates       integer                       (default 5)
//   seed             integer                       (default 0)
//   threads          integer                       (default 1)
//   output_dir       directory for results.csv, summary.txt, summary.json
//   alpha            Friedman level, 0.05 or 0.1   (default 0.05)
//   nemenyi_alpha    Nemenyi level, 0.05 or 0.1    (default 0.1)
constexpr const char* kBenchGrammar =
    "Config file: one 'key = value' per line, '#' comments. Keys: datasets, model, methods,\n"
    "classifier_grid, score_grid, replicates, seed, threads, output_dir, alpha, nemenyi_alpha.\n"
    "Unknown or repeated keys are rejected.";

struct BenchConfig {
  std::vector<fs::path> datasets;
  std::string model = "LR";
  std::vector<std::string> methods;
  std::string classifier_grid = "1,10,100,1000";
  std::string score_grid = "0,1,10,100,1000";
  int replicates = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  fs::path output_dir;
  double alpha = 0.05;
  double nemenyi_alpha = 0.10;
};

std::int64_t config_int(std::string_view key, std::string_view value, std::size_t line) {
  const auto v = selc::try_parse_int(value);
  if (!v || *v < 0) {
    throw selc::ConfigError("line " + std::to_string(line) + ": " + std::string(key) +
                            " must be a nonnegative integer");
  }
  return *v;
}

BenchConfig parse_bench_config(const fs::path& path) {
  auto in = open_input(path);
  BenchConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = selc::trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = selc::trim(body.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw selc::ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(selc::trim(body.substr(0, eq)));
    const auto value = selc::trim(body.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw selc::ConfigError("line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    if (key == "datasets") {
      for (auto item : selc::split(value, ',')) {
        item = selc::trim(item);
        if (item.empty()) continue;
        fs::path p(item);
        cfg.datasets.push_back(p.is_relative() ? path.parent_path() / p : p);
      }
    } else if (key == "model") {
      cfg.model = std::string(value);
    } else if (key == "methods") {
      for (auto item : selc::split(value, ',')) {
        item = selc::trim(item);
        if (!item.empty()) cfg.methods.emplace_back(item);
      }
    } else if (key == "classifier_grid") {
      cfg.classifier_grid = std::string(value);
    } else if (key == "score_grid") {
      cfg.score_grid = std::string(value);
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(config_int(key, value, line_no));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(config_int(key, value, line_no));
    } else if (key == "threads") {
      cfg.threads = static_cast<std::size_t>(config_int(key, value, line_no));
    } else if (key == "output_dir") {
      const fs::path p{std::string(value)};
      cfg.output_dir = p.is_relative() ? path.parent_path() / p : p;
    } else if (key == "alpha" || key == "nemenyi_alpha") {
      const auto v = selc::try_parse_double(value);
      if (!v) throw selc::ConfigError("line " + std::to_string(line_no) + ": " + key + " must be a number");
      (key == "alpha" ? cfg.alpha : cfg.nemenyi_alpha) = *v;
    } else {
      throw selc::ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (cfg.datasets.empty()) throw selc::ConfigError("bench config lists no datasets");
  if (cfg.methods.empty()) throw selc::ConfigError("bench config lists no methods");
  return cfg;
}

struct BenchOptions {
  std::string config;
  std::string out_dir;
};

int cmd_bench(const BenchOptions& o, const Common& common, bool threads_given) {
  auto cfg = parse_bench_config(o.config);
  if (common.seed_given) cfg.seed = common.seed;
  if (threads_given) cfg.threads = common.threads;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;

  selc::ProtocolConfig protocol;
  protocol.base_kind = parse_model_option(cfg.model);
  protocol.methods.clear();
  for (const auto& m : cfg.methods) protocol.methods.push_back(parse_method(m));
  protocol.classifier_grid = parse_grid(cfg.classifier_grid, "classifier_grid");
  protocol.score_grid = parse_grid(cfg.score_grid, "score_grid");
  protocol.replicates = cfg.replicates;
  protocol.seed = cfg.seed;
  protocol.threads = cfg.threads;
  selc::validate_protocol(protocol);
  selc::SummaryOptions summary{cfg.alpha, cfg.nemenyi_alpha, {}};
  (void)selc::chi_square_critical(1, summary.alpha);
  (void)selc::nemenyi_q(2, summary.nemenyi_alpha);

  std::vector<selc::DatasetJob> jobs;
  std::string settings = "bench model=" + cfg.model + " classifier_grid=" + join(protocol.classifier_grid) +
                         " score_grid=" + join(protocol.score_grid) +
                         " replicates=" + std::to_string(cfg.replicates) + " methods=";
  for (const auto& m : cfg.methods) settings += m + ";";
  for (const auto& path : cfg.datasets) {
    const auto manifest = selc::load_manifest(path);
    jobs.push_back({manifest.name, selc::load_dataset(manifest), manifest.split.ratios});
    settings += " dataset=" + manifest.name + ":" + manifest.source.generic_string();
  }
  settings += " alpha=" + selc::format_double(cfg.alpha) + " nemenyi_alpha=" + selc::format_double(cfg.nemenyi_alpha);

  const auto result = selc::run_protocol(jobs, protocol);
  const std::string header = provenance(cfg.seed, settings);
  // JSON has no comments, so the provenance line becomes its first field.
  summary.provenance = header;

  std::ostringstream summary_text;
  selc::write_summary_text(summary_text, result, summary);
  if (!cfg.output_dir.empty()) {
    {
      const auto path = cfg.output_dir / "results.csv";
      auto out = open_output(path);
      out << "# " << header << '\n';
      selc::write_results_csv(out, result);
      finish_output(out, path);
    }
    {
      const auto path = cfg.output_dir / "summary.txt";
      auto out = open_output(path);
      out << "# " << header << '\n' << summary_text.str();
      finish_output(out, path);
    }
    {
      const auto path = cfg.output_dir / "summary.json";
      auto out = open_output(path);
      out << selc::summary_json(result, summary);
      finish_output(out, path);
    }
  }
  std::cout << summary_text.str();
  return kExitOk;
}

// --- inspect --------------------------------------------------------------------

std::string first_record_line(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto body = selc::trim(line);
    if (!body.empty() && body.front() != '#') return std::string(body);
  }
  return {};
}

void describe_dataset(std::ostream& out, const selc::Dataset& data) {
  out << "samples " << data.size() << '\n'
      << "features " << data.dim() << '\n'
      << "storage " << (data.features().is_sparse() ? "sparse" : "dense") << '\n'
      << "labels " << data.num_labels() << '\n';
  std::vector<std::size_t> counts(static_cast<std::size_t>(data.num_labels()), 0);
  for (auto y : data.labels()) ++counts[static_cast<std::size_t>(y - 1)];
  const auto raw = data.raw_labels();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out << "label " << (k + 1);
    if (!raw.empty()) out << " raw=" << selc::format_double(raw[k]);
    out << " count=" << counts[k] << '\n';
  }
}

int cmd_inspect(const std::string& path_text, int label_column) {
  const fs::path path(path_text);
  const auto first = first_record_line(path);
  auto& out = std::cout;
  if (first.rfind("selc-model", 0) == 0) {
    auto in = open_input(path);
    const auto s = selc::load_classifier(in);
    out << "model " << selc::to_string(s.model.kind) << '\n'
        << "labels " << s.model.num_labels << '\n'
        << "dim " << s.model.dim() << '\n'
        << "reg_const " << selc::format_double(s.model.reg_const) << '\n'
        << "gap " << selc::format_double(s.model.relative_gap) << '\n'
        << "iterations " << s.model.iterations << '\n'
        << "normalizer " << (s.normalizer ? "yes" : "no") << '\n';
  } else if (first.rfind("selc-score", 0) == 0) {
    auto in = open_input(path);
    const auto s = selc::load_score(in);
    out << "score " << selc::to_string(s.score.kind) << '\n'
        << "base " << selc::to_string(s.score.base_kind) << '\n'
        << "blocks " << s.score.blocks() << '\n'
        << "dim " << s.score.scorer.dim << '\n'
        << "reg_const " << selc::format_double(s.score.reg_const) << '\n'
        << "gap " << selc::format_double(s.score.relative_gap) << '\n'
        << "normalizer " << (s.normalizer ? "yes" : "no") << '\n';
  } else if (path.extension() == ".json") {
    const auto m = selc::load_manifest(path);
    out << selc::manifest_to_json(m);
    describe_dataset(out, selc::load_dataset(m));
  } else {
    describe_dataset(out, selc::load_dataset_file(path, label_column));
  }
  return kExitOk;
}

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const selc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const selc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const selc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const selc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective classification: uncertainty scores, reject options and AuRC benchmarks"};
  app.set_version_flag("--version", SELC_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Exit codes: 0 ok, 1 other failure, 2 configuration, 3 parse, 4 numeric, 5 i/o.\n"
      "Output files start with a '# selc <version> seed=<seed> config=<hash>' line.");

  Common common;
  auto* seed_opt = app.add_option("--seed", common.seed, "random seed (overrides manifests/configs)");
  auto* threads_opt = app.add_option("--threads", common.threads, "worker threads")->default_val(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train a base classifier, C chosen on Val1");
  add_data_options(train_cmd, train.data);
  train_cmd->add_option("--model", train.model, "LR, SVM or SVOR")->default_val("LR");
  train_cmd->add_option("--C-grid", train.grid, "comma-separated C values")->default_val("1,10,100,1000");
  train_cmd->add_option("--out", train.out, "model file to write");
  train_cmd->add_option("--report", train.report, "training report to write");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "train an uncertainty score, C chosen on Val2 AuRC");
  add_data_options(score_cmd, score.data);
  score_cmd->add_option("--model", score.model, "base model file")->required();
  score_cmd->add_option("--method", score.method, "SELE, REG or TCP")->default_val("SELE");
  score_cmd->add_option("--C-grid", score.grid, "comma-separated C values")->default_val("0,1,10,100,1000");
  score_cmd->add_option("--out", score.out, "score file to write");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "risk-coverage curve, AuRC, R@90 and R@100");
  add_data_options(eval_cmd, eval.data);
  eval_cmd->add_option("--model", eval.model, "base model file");
  eval_cmd->add_option("--score", eval.score, "score file (default: the model's baseline score)");
  eval_cmd->add_option("--pairs", eval.pairs, "CSV of score,loss pairs instead of a model");
  eval_cmd->add_option("--split", eval.split, "trn1, val1, trn2, val2, tst or all")->default_val("tst");
  eval_cmd->add_option("--curve", eval.curve, "risk-coverage CSV to write");
  eval_cmd->add_option("--out", eval.out, "metrics file to write");

  RejectOptions reject;
  auto* reject_cmd = app.add_subcommand("reject", "solve a reject-option model on an empirical risk distribution");
  add_data_options(reject_cmd, reject.data);
  reject_cmd->add_option("--type", reject.type, "cost, bounded-improvement or bounded-coverage")->required();
  reject_cmd->add_option("--epsilon", reject.epsilon, "rejection cost (cost)");
  reject_cmd->add_option("--lambda", reject.lambda, "target selective risk (bounded-improvement)");
  reject_cmd->add_option("--omega", reject.omega, "target coverage (bounded-coverage)");
  reject_cmd->add_option("--atoms", reject.atoms, "explicit distribution, e.g. 0.1:0.5,0.3:0.5");
  reject_cmd->add_option("--pairs", reject.pairs, "CSV of score,loss pairs");
  reject_cmd->add_option("--model", reject.model, "base model file");
  reject_cmd->add_option("--score", reject.score, "score file");
  reject_cmd->add_option("--split", reject.split, "split to use with --model")->default_val("tst");
  reject_cmd->add_option("--out", reject.out, "result file to write");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "run the benchmark protocol from a config file");
  bench_cmd->add_option("--config", bench.config, "bench config file")->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory (overrides output_dir)");
  bench_cmd->footer(kBenchGrammar);

  std::string inspect_path;
  int inspect_label_column = -1;
  auto* inspect_cmd = app.add_subcommand("inspect", "describe a model, score, manifest or dataset file");
  inspect_cmd->add_option("path", inspect_path, "file to describe")->required();
  inspect_cmd->add_option("--label-column", inspect_label_column, "CSV label column")->default_val(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  common.seed_given = seed_opt->count() > 0;
  if (common.threads < 1) {
    std::cerr << "configuration error: --threads must be >= 1\n";
    return kExitConfig;
  }

  return run_guarded([&]() -> int {
    if (*train_cmd) return cmd_train(train, common);
    if (*score_cmd) return cmd_score(score, common);
    if (*eval_cmd) return cmd_eval(eval, common);
    if (*reject_cmd) return cmd_reject(reject, common);
    if (*bench_cmd) return cmd_bench(bench, common, threads_opt->count() > 0);
    return cmd_inspect(inspect_path, inspect_label_column);
  });
}
