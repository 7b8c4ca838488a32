#include "selc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "selc/metrics.hpp"
#include "selc/numeric.hpp"
#include "selc/text_format.hpp"

namespace selc {

// --- rank statistics ------------------------------------------------------------

RankTable rank_methods(const std::vector<std::vector<double>>& values) {
  if (values.empty()) throw IncompleteGridError("rank table has no datasets");
  const std::size_t k = values.front().size();
  if (k == 0) throw IncompleteGridError("rank table has no methods");
  RankTable table;
  table.average.assign(k, 0.0);
  for (std::size_t d = 0; d < values.size(); ++d) {
    const auto& row = values[d];
    if (row.size() != k) throw IncompleteGridError("dataset " + std::to_string(d + 1) + " is missing methods");
    for (double v : row) {
      if (std::isnan(v)) throw IncompleteGridError("dataset " + std::to_string(d + 1) + " has an empty cell");
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    std::vector<double> ranks(k);
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
      const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
      i = j + 1;
    }
    for (std::size_t m = 0; m < k; ++m) table.average[m] += ranks[m];
    table.per_dataset.push_back(std::move(ranks));
  }
  for (auto& a : table.average) a /= static_cast<double>(values.size());
  return table;
}

namespace {

// Upper-tail chi-square quantiles, df = 1..9.
constexpr double kChi2Alpha05[] = {3.841, 5.991, 7.815, 9.488, 11.070, 12.592, 14.067, 15.507, 16.919};
constexpr double kChi2Alpha10[] = {2.706, 4.605, 6.251, 7.779, 9.236, 10.645, 12.017, 13.362, 14.684};

// Studentized range q_alpha(K, inf) / sqrt(2), K = 2..10.
constexpr double kNemenyiQ05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
constexpr double kNemenyiQ10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};

const double* alpha_table(double alpha, const double* at05, const double* at10) {
  if (std::fabs(alpha - 0.05) < 1e-12) return at05;
  if (std::fabs(alpha - 0.10) < 1e-12) return at10;
  throw DomainError("only alpha = 0.05 and alpha = 0.10 are tabulated");
}

}  // namespace

double chi_square_critical(int df, double alpha) {
  const double* table = alpha_table(alpha, kChi2Alpha05, kChi2Alpha10);
  if (df < 1 || df > 9) throw DomainError("chi-square table covers 1..9 degrees of freedom");
  return table[df - 1];
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& ranks, double alpha) {
  const std::size_t d = ranks.size();
  if (d < 2) throw SizeError("the Friedman test needs at least two datasets");
  const std::size_t k = ranks.front().size();
  if (k < 2) throw SizeError("the Friedman test needs at least two methods");
  std::vector<double> mean(k, 0.0);
  for (const auto& row : ranks) {
    if (row.size() != k) throw IncompleteGridError("rank matrix is ragged");
    for (std::size_t j = 0; j < k; ++j) mean[j] += row[j];
  }
  const double dd = static_cast<double>(d);
  const double kk = static_cast<double>(k);
  double sum_sq = 0.0;
  for (auto& m : mean) {
    m /= dd;
    sum_sq += m * m;
  }
  FriedmanResult out;
  out.statistic = 12.0 * dd / (kk * (kk + 1.0)) * (sum_sq - kk * (kk + 1.0) * (kk + 1.0) / 4.0);
  out.degrees_of_freedom = static_cast<int>(k) - 1;
  out.critical_value = chi_square_critical(out.degrees_of_freedom, alpha);
  out.rejected = out.statistic > out.critical_value;
  return out;
}

double nemenyi_q(int num_methods, double alpha) {
  const double* table = alpha_table(alpha, kNemenyiQ05, kNemenyiQ10);
  if (num_methods < 2 || num_methods > 10) throw DomainError("Nemenyi table covers 2..10 methods");
  return table[num_methods - 2];
}

double nemenyi_cd(int num_methods, int num_datasets, double alpha) {
  if (num_datasets < 1) throw DomainError("Nemenyi CD needs at least one dataset");
  const double k = num_methods;
  return nemenyi_q(num_methods, alpha) * std::sqrt(k * (k + 1.0) / (6.0 * num_datasets));
}

double relative_improvement(double baseline_aurc, double method_aurc) {
  if (!(baseline_aurc > 0.0)) throw DomainError("relative improvement needs a positive baseline");
  return 100.0 * (baseline_aurc - method_aurc) / baseline_aurc;
}

// --- protocol -------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, int replicate, std::size_t index) {
  return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(replicate) * 1000003ULL + index);
}

std::string baseline_method_name(ModelKind base) {
  return base == ModelKind::LR ? "MCP" : "MARGIN";
}

std::string method_name(ScoreKind kind, ModelKind base) {
  if (kind == ScoreKind::Baseline) return baseline_method_name(base);
  return std::string(to_string(kind));
}

LossSpec protocol_loss(ModelKind base, int num_labels) {
  return {base == ModelKind::SVOR ? LossKind::MAE : LossKind::ZeroOneTimes100, num_labels};
}

void validate_protocol(const ProtocolConfig& config) {
  if (config.methods.empty()) throw ConfigError("no score methods selected");
  if (config.classifier_grid.empty()) throw ConfigError("classifier C grid is empty");
  if (config.score_grid.empty()) throw ConfigError("score C grid is empty");
  for (double c : config.classifier_grid) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("classifier C values must be >= 0");
  }
  for (double c : config.score_grid) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("score C values must be >= 0");
  }
  if (config.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const auto m = config.methods[i];
    if (m == ScoreKind::TCP && config.base_kind != ModelKind::LR) {
      throw ConfigError("method TCP does not apply to base model " +
                        std::string(to_string(config.base_kind)) + " (TCP needs LR)");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (config.methods[j] == m) throw ConfigError("method listed twice: " + method_name(m, config.base_kind));
    }
  }
}

namespace {

template <class T>
std::vector<T> gather(std::span<const T> values, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(values[i]);
  return out;
}

double mean_of(std::span<const double> v) { return compensated_sum(v) / static_cast<double>(v.size()); }

struct Evaluated {
  double aurc;
  double r90;
  double r100;
};

Evaluated evaluate_scores(std::span<const double> scores, std::span<const double> losses) {
  const auto curve = rc_curve(scores, losses);
  return {aurc(scores, losses), risk_at_coverage(curve, 0.9), risk_at_coverage(curve, 1.0)};
}

std::vector<ResultRow> run_replicate(const DatasetJob& job, int replicate,
                                     const ProtocolConfig& config) {
  SplitPlan plan;
  plan.ratios = job.ratios;
  plan.seed = config.seed;
  plan.replicate = replicate;
  const auto splits = make_splits(job.data.size(), plan);
  const auto& trn1 = splits[static_cast<std::size_t>(Split::Trn1)];
  const auto& val1 = splits[static_cast<std::size_t>(Split::Val1)];
  const auto& trn2 = splits[static_cast<std::size_t>(Split::Trn2)];
  const auto& val2 = splits[static_cast<std::size_t>(Split::Val2)];
  const auto& tst = splits[static_cast<std::size_t>(Split::Tst)];

  // The classifier sees Trn1-normalized features, the scores Trn2-normalized ones.
  const Dataset view1 = apply_normalizer(fit_normalizer(job.data, trn1), job.data);
  const Dataset view2 = apply_normalizer(fit_normalizer(job.data, trn2), job.data);
  const LossSpec loss = protocol_loss(config.base_kind, job.data.num_labels());

  const Dataset trn1_data = view1.subset(trn1);
  const Dataset val1_data = view1.subset(val1);
  std::optional<TrainedClassifier> base;
  double best_val_risk = 0.0;
  for (double c : config.classifier_grid) {
    auto model = train_classifier(config.base_kind, trn1_data, c, config.classifier_options);
    const auto losses = loss_vector(loss, val1_data, predict_all(model, val1_data));
    const double risk = mean_of(losses);
    if (!base || risk < best_val_risk) {
      best_val_risk = risk;
      base = std::move(model);
    }
  }

  const auto predictions = predict_all(*base, view1);
  const auto losses = loss_vector(loss, view1, predictions);
  const auto tst_losses = gather<double>(losses, tst);

  const Dataset trn2_data = view2.subset(trn2);
  const Dataset val2_data = view2.subset(val2);
  const Dataset tst_data = view2.subset(tst);
  const auto trn2_pred = gather<Label>(predictions, trn2);
  const auto val2_pred = gather<Label>(predictions, val2);
  const auto tst_pred = gather<Label>(predictions, tst);
  const auto val2_losses = gather<double>(losses, val2);

  std::vector<double> tcp_targets;
  std::vector<ResultRow> rows;
  for (ScoreKind method : config.methods) {
    ResultRow row;
    row.dataset = job.name;
    row.method = method_name(method, config.base_kind);
    row.replicate = replicate;
    row.c_classifier = base->reg_const;

    std::vector<double> tst_scores;
    if (method == ScoreKind::Baseline) {
      tst_scores.reserve(tst.size());
      for (std::size_t i : tst) tst_scores.push_back(baseline_uncertainty(*base, view1.row(i)));
    } else {
      if (method == ScoreKind::TCP && tcp_targets.empty()) {
        for (std::size_t i : trn2) {
          const auto posterior = lr_posterior(*base, view1.row(i));
          tcp_targets.push_back(posterior[static_cast<std::size_t>(view1.label(i) - 1)]);
        }
      }
      const auto targets = method == ScoreKind::TCP ? tcp_targets : gather<double>(losses, trn2);
      std::optional<UncertaintyScore> best;
      double best_aurc = 0.0;
      for (std::size_t g = 0; g < config.score_grid.size(); ++g) {
        const double c = config.score_grid[g];
        UncertaintyScore score;
        if (method == ScoreKind::SELE) {
          Rng rng(stream_seed(config.seed, replicate, g));
          score = fit_sele_score(base->kind, base->num_labels, trn2_data, trn2_pred, targets, c, rng,
                                 config.score_options);
        } else {
          score = fit_regression_score(method, base->kind, base->num_labels, trn2_data, trn2_pred,
                                       targets, c);
        }
        const double val = aurc(score_dataset(score, val2_data, val2_pred), val2_losses);
        if (!best || val < best_aurc) {
          best_aurc = val;
          best = std::move(score);
        }
      }
      row.c_score = best->reg_const;
      tst_scores = score_dataset(*best, tst_data, tst_pred);
    }
    const auto ev = evaluate_scores(tst_scores, tst_losses);
    row.aurc = ev.aurc;
    row.r_at_90 = ev.r90;
    row.r_at_100 = ev.r100;
    rows.push_back(std::move(row));
  }
  return rows;
}

double population_std(const std::vector<double>& v, double mean) {
  CompensatedSum acc;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc.value() / static_cast<double>(v.size()));
}

}  // namespace

ExperimentResult run_protocol(const std::vector<DatasetJob>& datasets, const ProtocolConfig& config) {
  validate_protocol(config);
  if (datasets.empty()) throw ConfigError("no datasets given");

  ExperimentResult result;
  for (const auto& job : datasets) result.datasets.push_back(job.name);
  for (ScoreKind m : config.methods) result.methods.push_back(method_name(m, config.base_kind));

  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::size_t jobs = datasets.size() * reps;
  std::vector<std::vector<ResultRow>> slots(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        slots[j] = run_replicate(datasets[j / reps], static_cast<int>(j % reps) + 1, config);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(config.threads, jobs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& s : slots) {
    for (auto& row : s) result.rows.push_back(std::move(row));
  }
  return result;
}

std::vector<SummaryCell> ExperimentResult::summarize() const {
  std::vector<SummaryCell> cells;
  for (const auto& ds : datasets) {
    for (const auto& m : methods) {
      std::vector<double> a, r90, r100;
      for (const auto& row : rows) {
        if (row.dataset != ds || row.method != m) continue;
        a.push_back(row.aurc);
        r90.push_back(row.r_at_90);
        r100.push_back(row.r_at_100);
      }
      SummaryCell cell;
      cell.dataset = ds;
      cell.method = m;
      cell.count = a.size();
      if (!a.empty()) {
        cell.aurc_mean = mean_of(a);
        cell.aurc_std = population_std(a, cell.aurc_mean);
        cell.r90_mean = mean_of(r90);
        cell.r90_std = population_std(r90, cell.r90_mean);
        cell.r100_mean = mean_of(r100);
        cell.r100_std = population_std(r100, cell.r100_mean);
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<std::vector<double>> ExperimentResult::mean_aurc_grid() const {
  const auto cells = summarize();
  std::vector<std::vector<double>> grid(datasets.size(), std::vector<double>(methods.size()));
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& cell = cells[d * methods.size() + m];
      grid[d][m] = cell.count == 0 ? std::nan("") : cell.aurc_mean;
    }
  }
  return grid;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "dataset,method,replicate,C_classifier,C_score,aurc,r_at_90,r_at_100\n";
  for (const auto& r : result.rows) {
    out << r.dataset << ',' << r.method << ',' << r.replicate << ',' << format_double(r.c_classifier)
        << ',' << (r.c_score ? format_double(*r.c_score) : std::string()) << ','
        << format_double(r.aurc) << ',' << format_double(r.r_at_90) << ','
        << format_double(r.r_at_100) << '\n';
  }
}

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct RankSection {
  std::optional<RankTable> ranks;
  std::optional<FriedmanResult> friedman;
  std::optional<double> cd;
  std::string note;
};

RankSection rank_section(const ExperimentResult& result, const SummaryOptions& options) {
  RankSection s;
  const int k = static_cast<int>(result.methods.size());
  const int d = static_cast<int>(result.datasets.size());
  s.ranks = rank_methods(result.mean_aurc_grid());
  if (k < 2 || k > 10) {
    s.note = "rank tests need 2..10 methods";
    return s;
  }
  s.cd = nemenyi_cd(k, d, options.nemenyi_alpha);
  if (d < 2) {
    s.note = "Friedman test needs at least two datasets";
    return s;
  }
  s.friedman = friedman_test(s.ranks->per_dataset, options.alpha);
  return s;
}

}  // namespace

void write_summary_text(std::ostream& out, const ExperimentResult& result,
                        const SummaryOptions& options) {
  out << "dataset\tmethod\tAuRC\tR@90\tR@100\n";
  for (const auto& c : result.summarize()) {
    out << c.dataset << '\t' << c.method << '\t' << fixed4(c.aurc_mean) << " +- " << fixed4(c.aurc_std)
        << '\t' << fixed4(c.r90_mean) << " +- " << fixed4(c.r90_std) << '\t' << fixed4(c.r100_mean)
        << " +- " << fixed4(c.r100_std) << '\n';
  }
  const auto s = rank_section(result, options);
  out << "\naverage rank";
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    out << '\t' << result.methods[m] << '=' << fixed4(s.ranks->average[m]);
  }
  out << '\n';
  if (s.friedman) {
    out << "friedman statistic=" << fixed4(s.friedman->statistic) << " critical("
        << format_double(options.alpha) << ", df=" << s.friedman->degrees_of_freedom
        << ")=" << fixed4(s.friedman->critical_value)
        << (s.friedman->rejected ? " rejected" : " not rejected") << '\n';
  }
  if (s.cd) {
    out << "nemenyi CD(alpha=" << format_double(options.nemenyi_alpha) << ")=" << fixed4(*s.cd) << '\n';
  }
  if (!s.note.empty()) out << "note: " << s.note << '\n';
}

std::string summary_json(const ExperimentResult& result, const SummaryOptions& options) {
  nlohmann::ordered_json j;
  if (!options.provenance.empty()) j["provenance"] = options.provenance;
  j["datasets"] = result.datasets;
  j["methods"] = result.methods;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : result.summarize()) {
    nlohmann::ordered_json cell;
    cell["dataset"] = c.dataset;
    cell["method"] = c.method;
    cell["replicates"] = c.count;
    cell["aurc_mean"] = c.aurc_mean;
    cell["aurc_std"] = c.aurc_std;
    cell["r_at_90_mean"] = c.r90_mean;
    cell["r_at_90_std"] = c.r90_std;
    cell["r_at_100_mean"] = c.r100_mean;
    cell["r_at_100_std"] = c.r100_std;
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  const auto s = rank_section(result, options);
  j["average_ranks"] = s.ranks->average;
  if (s.friedman) {
    j["friedman"] = {{"alpha", options.alpha},
                     {"statistic", s.friedman->statistic},
                     {"critical_value", s.friedman->critical_value},
                     {"degrees_of_freedom", s.friedman->degrees_of_freedom},
                     {"rejected", s.friedman->rejected}};
  }
  if (s.cd) j["nemenyi_cd"] = {{"alpha", options.nemenyi_alpha}, {"value", *s.cd}};
  if (!s.note.empty()) j["note"] = s.note;
  return j.dump(2) + "\n";
}

}  // namespace selc
