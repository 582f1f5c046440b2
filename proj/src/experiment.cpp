#include "cda/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cda/errors.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cda {
namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Grid-search-informed defaults on the default generator config.
double default_alpha(ModelKind kind, Metric metric) {
  (void)metric;
  switch (kind) {
    case ModelKind::kNt: return 1.0;
    case ModelKind::kSda: return 0.5;
    case ModelKind::kIada: return 0.9;
    case ModelKind::kLada: return 0.2;
  }
  return 1.0;
}

}  // namespace

TrainConfig ExperimentConfig::train_for(ModelKind kind, double alpha) const {
  const auto it = train_per_model.find(kind_name(kind));
  TrainConfig t = it != train_per_model.end() ? it->second : train;
  t.alpha = alpha;
  return t;
}

double ExperimentConfig::alpha_for(ModelKind kind, Metric metric) const {
  if (kind == ModelKind::kNt) return 1.0;
  const auto m_it = alphas.find(kind_name(kind));
  if (m_it != alphas.end()) {
    const auto a_it = m_it->second.find(metric_name(metric));
    if (a_it != m_it->second.end()) return a_it->second;
  }
  return default_alpha(kind, metric);
}

void ExperimentConfig::validate() const {
  generator.validate();
  if (!(volume_fraction > 0.0 && volume_fraction <= 1.0))
    throw ConfigError("config: split.volume_fraction must be in (0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("config: split.validation_fraction must be in [0, 1)");
  train.validate();
  for (const auto& [name, t] : train_per_model) {
    kind_from_name(name);
    t.validate();
  }
  if (models.empty()) throw ConfigError("config: models must be non-empty");
  if (std::set<ModelKind>(models.begin(), models.end()).size() != models.size())
    throw ConfigError("config: duplicate model kind");
  if (metrics.empty()) throw ConfigError("config: metrics must be non-empty");
  if (std::set<Metric>(metrics.begin(), metrics.end()).size() != metrics.size())
    throw ConfigError("config: duplicate metric");
  for (const auto& [model, per_metric] : alphas) {
    kind_from_name(model);
    for (const auto& [metric, a] : per_metric) {
      metric_from_name(metric);
      if (!(a >= 0.0 && a <= 1.0))
        throw ConfigError("config: alpha for " + model + "/" + metric +
                          " outside [0, 1]");
    }
  }
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a <= 1.0))
      throw ConfigError("config: alpha_grid values must lie in [0, 1]");
  if (fractions.empty() || fractions.front() != 0.0)
    throw ConfigError("config: fractions must start at 0");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] < 0.0 || fractions[i] > 1.0)
      throw ConfigError("config: fractions must lie in [0, 1]");
    if (i > 0 && fractions[i] <= fractions[i - 1])
      throw ConfigError("config: fractions must be strictly ascending");
  }
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("config: seeds must be distinct");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (!k_policy.is_auto && k_policy.fixed_k < 1)
    throw ConfigError("config: fixed k must be >= 1");
}

namespace {

[[noreturn]] void config_fail(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin + ": " + msg);
}

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::string& origin, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      config_fail(origin, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read_field(const json& j, const char* key, T& out,
                const std::string& origin, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(origin, where + "." + key + ": " + e.what());
  }
}

TrainConfig parse_train_block(const json& j, const TrainConfig& base,
                              const std::string& origin,
                              const std::string& where) {
  expect_keys(j,
              {"hidden_dim", "latent_dim", "dropout", "learning_rate",
               "batch_size", "epochs", "fine_tune_epochs"},
              origin, where);
  TrainConfig t = base;
  read_field(j, "hidden_dim", t.hidden_dim, origin, where);
  read_field(j, "latent_dim", t.latent_dim, origin, where);
  read_field(j, "dropout", t.dropout, origin, where);
  read_field(j, "learning_rate", t.learning_rate, origin, where);
  read_field(j, "batch_size", t.batch_size, origin, where);
  read_field(j, "epochs", t.epochs, origin, where);
  read_field(j, "fine_tune_epochs", t.fine_tune_epochs, origin, where);
  return t;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_fail(origin, e.what());
  }
  if (!j.is_object()) config_fail(origin, "top level must be a JSON object");
  expect_keys(j,
              {"generator", "split", "train", "train_per_model", "models",
               "alphas", "alpha_grid", "fractions", "metrics", "k", "seeds",
               "threads"},
              origin, "the top level");

  ExperimentConfig config;
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    expect_keys(g,
                {"n_partners", "n_users", "category_dim", "campaign_dim",
                 "categories_per_partner", "zipf_exponent",
                 "partner_noise_scale", "label_noise_scale",
                 "target_positive_rate", "engagement_threshold", "rate_scale",
                 "n_train_impressions", "n_eval_impressions"},
                origin, "generator");
    GeneratorConfig& c = config.generator;
    read_field(g, "n_partners", c.n_partners, origin, "generator");
    read_field(g, "n_users", c.n_users, origin, "generator");
    read_field(g, "category_dim", c.category_dim, origin, "generator");
    read_field(g, "campaign_dim", c.campaign_dim, origin, "generator");
    read_field(g, "categories_per_partner", c.categories_per_partner, origin,
               "generator");
    read_field(g, "zipf_exponent", c.zipf_exponent, origin, "generator");
    read_field(g, "partner_noise_scale", c.partner_noise_scale, origin,
               "generator");
    read_field(g, "label_noise_scale", c.label_noise_scale, origin, "generator");
    read_field(g, "target_positive_rate", c.target_positive_rate, origin,
               "generator");
    read_field(g, "engagement_threshold", c.engagement_threshold, origin,
               "generator");
    read_field(g, "rate_scale", c.rate_scale, origin, "generator");
    read_field(g, "n_train_impressions", c.n_train_impressions, origin,
               "generator");
    read_field(g, "n_eval_impressions", c.n_eval_impressions, origin,
               "generator");
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    expect_keys(s, {"volume_fraction", "validation_fraction"}, origin, "split");
    read_field(s, "volume_fraction", config.volume_fraction, origin, "split");
    read_field(s, "validation_fraction", config.validation_fraction, origin,
               "split");
  }
  if (j.contains("train"))
    config.train = parse_train_block(j.at("train"), TrainConfig{}, origin, "train");
  if (j.contains("train_per_model")) {
    const json& tpm = j.at("train_per_model");
    if (!tpm.is_object())
      config_fail(origin, "train_per_model must be an object");
    for (const auto& [model, block] : tpm.items()) {
      kind_from_name(model);
      config.train_per_model[model] = parse_train_block(
          block, config.train, origin, "train_per_model." + model);
    }
  }
  if (j.contains("models")) {
    config.models.clear();
    try {
      for (const auto& name : j.at("models"))
        config.models.push_back(kind_from_name(name.get<std::string>()));
    } catch (const json::exception& e) {
      config_fail(origin, std::string("models: ") + e.what());
    }
  }
  if (j.contains("alphas")) {
    const json& a = j.at("alphas");
    if (!a.is_object()) config_fail(origin, "alphas must be an object");
    for (const auto& [model, per_metric] : a.items()) {
      kind_from_name(model);
      if (!per_metric.is_object())
        config_fail(origin, "alphas." + model + " must be an object");
      for (const auto& [metric, value] : per_metric.items()) {
        metric_from_name(metric);
        try {
          config.alphas[model][metric] = value.get<double>();
        } catch (const json::exception& e) {
          config_fail(origin, "alphas." + model + "." + metric + ": " + e.what());
        }
      }
    }
  }
  if (j.contains("alpha_grid")) {
    try {
      config.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    } catch (const json::exception& e) {
      config_fail(origin, std::string("alpha_grid: ") + e.what());
    }
    std::sort(config.alpha_grid.begin(), config.alpha_grid.end());
    config.alpha_grid.erase(
        std::unique(config.alpha_grid.begin(), config.alpha_grid.end()),
        config.alpha_grid.end());
  }
  if (j.contains("fractions")) {
    try {
      config.fractions = j.at("fractions").get<std::vector<double>>();
    } catch (const json::exception& e) {
      config_fail(origin, std::string("fractions: ") + e.what());
    }
  }
  if (j.contains("metrics")) {
    config.metrics.clear();
    try {
      for (const auto& name : j.at("metrics"))
        config.metrics.push_back(metric_from_name(name.get<std::string>()));
    } catch (const json::exception& e) {
      config_fail(origin, std::string("metrics: ") + e.what());
    }
  }
  if (j.contains("k")) {
    const json& k = j.at("k");
    if (k.is_string() && k.get<std::string>() == "auto") {
      config.k_policy = KPolicy::auto_k();
    } else if (k.is_number_unsigned() || k.is_number_integer()) {
      const long long v = k.get<long long>();
      if (v < 1) config_fail(origin, "k must be >= 1 or \"auto\"");
      config.k_policy = KPolicy::fixed(static_cast<std::size_t>(v));
    } else {
      config_fail(origin, "k must be an integer or \"auto\"");
    }
  }
  if (j.contains("seeds")) {
    try {
      config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
      config_fail(origin, std::string("seeds: ") + e.what());
    }
  }
  read_field(j, "threads", config.threads, origin, "the top level");

  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path);
}

std::vector<ScoredRecord> score_records(
    const ModelBundle& bundle, const std::vector<ImpressionRecord>& records,
    View view) {
  const std::vector<double> probs = predict(bundle, records, view);
  std::vector<ScoredRecord> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out[i] = ScoredRecord{records[i].id, records[i].partner, probs[i],
                          records[i].label};
  return out;
}

GridSearchResult grid_search(const ExperimentConfig& config, ModelKind kind,
                             Metric metric, std::uint64_t seed) {
  GridSearchResult result;
  result.kind = kind;
  result.metric = metric;
  result.seed = seed;
  if (kind == ModelKind::kNt) {
    result.chosen_alpha = 1.0;  // no transfer term to weigh
    return result;
  }
  if (config.alpha_grid.empty())
    throw ConfigError("grid search: alpha_grid is empty");

  const Dataset dataset = generate(config.generator, seed);
  const DatasetSplit split = split_head_tail(
      dataset, config.volume_fraction, config.validation_fraction, seed);
  if (split.validation.empty())
    throw DataError("grid search: no validation partners in the tail");
  const FeatureSchema schema{dataset.config.category_dim,
                             dataset.config.campaign_dim};
  const std::vector<ImpressionRecord> head_train =
      records_for(dataset.records, split.head, 0);
  const std::vector<ImpressionRecord> val_eval =
      records_for(dataset.records, split.validation, 1);
  if (val_eval.empty())
    throw DataError("grid search: validation partners have no eval-day records");

  double best_alpha = config.alpha_grid.front();
  double best_value = -1.0;
  for (double alpha : config.alpha_grid) {
    const ModelBundle bundle = train_base(
        kind, schema, config.train_for(kind, alpha), head_train, seed);
    const std::vector<ScoredRecord> scored =
        score_records(bundle, val_eval, View::kTarget);
    const double value = aggregate(scored, metric, config.k_policy).macro;
    result.table.push_back({alpha, value});
    if (value >= best_value) {  // ties fall to the larger alpha
      best_value = value;
      best_alpha = alpha;
    }
  }
  result.chosen_alpha = best_alpha;
  return result;
}

namespace {

struct Cell {
  ModelKind kind = ModelKind::kNt;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics;
  bool emit_roc = false;
  std::string stem;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  const Metric roc_metric =
      std::count(config.metrics.begin(), config.metrics.end(), Metric::kAuc)
          ? Metric::kAuc
          : config.metrics.front();
  std::vector<Cell> cells;
  for (ModelKind kind : config.models) {
    std::vector<std::pair<double, std::vector<Metric>>> groups;
    for (Metric metric : config.metrics) {
      const double alpha = config.alpha_for(kind, metric);
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == alpha; });
      if (it == groups.end())
        groups.push_back({alpha, {metric}});
      else
        it->second.push_back(metric);
    }
    for (const auto& [alpha, metrics] : groups) {
      const bool roc_group =
          std::count(metrics.begin(), metrics.end(), roc_metric) > 0;
      for (std::uint64_t seed : config.seeds) {
        Cell cell;
        cell.kind = kind;
        cell.alpha = alpha;
        cell.seed = seed;
        cell.metrics = metrics;
        cell.emit_roc = roc_group && seed == config.seeds.front();
        cell.stem = kind_name(kind) + "_a" + fmt_g(alpha) + "_s" +
                    std::to_string(seed);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

constexpr const char* kResultsHeader =
    "model,fraction,setting,metric,k,value,n_partners,seed";

std::vector<std::string> run_cell_rows(const ExperimentConfig& config,
                                       const Dataset& dataset,
                                       const DatasetSplit& split,
                                       const Cell& cell,
                                       const fs::path& roc_path) {
  const FeatureSchema schema{dataset.config.category_dim,
                             dataset.config.campaign_dim};
  const std::vector<ImpressionRecord> head_train =
      records_for(dataset.records, split.head, 0);
  const std::vector<ImpressionRecord> test_train =
      records_for(dataset.records, split.test, 0);
  const std::vector<ImpressionRecord> test_eval =
      records_for(dataset.records, split.test, 1);
  if (test_eval.empty())
    throw DataError("journey: no tail-test eval-day records to evaluate");

  const ModelBundle base =
      train_base(cell.kind, schema, config.train_for(cell.kind, cell.alpha),
                 head_train, cell.seed);

  const long long k_col =
      config.k_policy.is_auto ? 0
                              : static_cast<long long>(config.k_policy.fixed_k);
  std::vector<std::string> rows;
  for (double fraction : config.fractions) {
    const bool cold = fraction == 0.0;
    ModelBundle tuned;
    const ModelBundle* bundle = &base;
    if (!cold) {
      tuned = base;
      fine_tune(tuned, sample_fraction(test_train, fraction, cell.seed),
                cell.seed);
      bundle = &tuned;
    }
    const std::vector<ScoredRecord> scored =
        score_records(*bundle, test_eval, cold ? View::kTarget : View::kSource);
    for (Metric metric : cell.metrics) {
      const EvalReport report = aggregate(scored, metric, config.k_policy);
      for (const char* setting : {"macro", "micro"}) {
        const double value =
            setting == std::string("macro") ? report.macro : report.micro;
        std::ostringstream row;
        row << kind_name(cell.kind) << "," << fmt_g(fraction) << "," << setting
            << "," << metric_name(metric) << "," << k_col << ","
            << fmt_full(value) << "," << report.n_partners_included << ","
            << cell.seed;
        rows.push_back(row.str());
      }
    }
    if (cold && cell.emit_roc) {
      const auto pts = roc_points(scored);
      if (pts) {
        std::ostringstream out;
        out << "fpr,tpr\n";
        for (const RocPoint& p : *pts)
          out << fmt_full(p.fpr) << "," << fmt_full(p.tpr) << "\n";
        write_text_atomic(roc_path, out.str());
      }
    }
  }
  return rows;
}

}  // namespace

JourneySummary run_journey(const ExperimentConfig& config,
                           const std::string& out_dir) {
  config.validate();
  const fs::path root(out_dir);
  fs::create_directories(root / "cells");
  fs::create_directories(root / "roc");

  const std::vector<Cell> cells = enumerate_cells(config);
  JourneySummary summary;
  summary.results_path = (root / "results.csv").string();

  std::mutex counter_mutex;
  for (std::uint64_t seed : config.seeds) {
    std::vector<const Cell*> pending;
    for (const Cell& cell : cells) {
      if (cell.seed != seed) continue;
      if (fs::exists(root / "cells" / (cell.stem + ".csv")))
        ++summary.cells_skipped;
      else
        pending.push_back(&cell);
    }
    if (pending.empty()) continue;

    const Dataset dataset = generate(config.generator, seed);
    const DatasetSplit split = split_head_tail(
        dataset, config.volume_fraction, config.validation_fraction, seed);

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= pending.size()) return;
        const Cell& cell = *pending[i];
        const fs::path cell_path = root / "cells" / (cell.stem + ".csv");
        const fs::path failed_path = root / "cells" / (cell.stem + ".failed");
        try {
          const std::vector<std::string> rows = run_cell_rows(
              config, dataset, split, cell,
              root / "roc" / (kind_name(cell.kind) + ".csv"));
          std::string text;
          for (const std::string& row : rows) text += row + "\n";
          write_text_atomic(cell_path, text);
          std::lock_guard<std::mutex> lock(counter_mutex);
          ++summary.cells_run;
          if (fs::exists(failed_path)) fs::remove(failed_path);
        } catch (const std::exception& e) {
          write_text_atomic(failed_path, std::string(e.what()) + "\n");
          std::lock_guard<std::mutex> lock(counter_mutex);
          ++summary.cells_failed;
        }
      }
    };
    const std::size_t n_workers = std::min<std::size_t>(
        static_cast<std::size_t>(config.threads), pending.size());
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
  }

  // deterministic merge: canonical cell order, cell rows verbatim
  std::string merged = std::string(kResultsHeader) + "\n";
  for (const Cell& cell : cells) {
    const fs::path cell_path = root / "cells" / (cell.stem + ".csv");
    if (!fs::exists(cell_path)) continue;
    std::ifstream in(cell_path);
    if (!in) throw DataError("cannot read '" + cell_path.string() + "'");
    std::string line;
    while (std::getline(in, line)) merged += line + "\n";
  }
  write_text_atomic(root / "results.csv", merged);

  std::string alpha_text = "model,metric,alpha\n";
  for (ModelKind kind : config.models)
    for (Metric metric : config.metrics)
      alpha_text += kind_name(kind) + "," + metric_name(metric) + "," +
                    fmt_g(config.alpha_for(kind, metric)) + "\n";
  write_text_atomic(root / "alphas.csv", alpha_text);
  return summary;
}

namespace {

struct ResultRow {
  std::string model;
  double fraction = 0.0;
  std::string setting;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

std::vector<ResultRow> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("no results table at '" + path.string() +
                    "'; run journey first");
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw ParseError(path.string() + ":1: bad results header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (fields.size() != 8)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 8 fields");
    try {
      ResultRow row;
      row.model = fields[0];
      row.fraction = std::stod(fields[1]);
      row.setting = fields[2];
      row.metric = fields[3];
      row.value = std::stod(fields[5]);
      row.seed = std::stoull(fields[7]);
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad numeric field");
    }
  }
  return rows;
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ReportResult write_report(const ExperimentConfig& config,
                          const std::string& out_dir) {
  const fs::path root(out_dir);
  const std::vector<ResultRow> rows = read_results(root / "results.csv");
  if (rows.empty())
    throw DataError("results table at '" + (root / "results.csv").string() +
                    "' holds no rows");

  // (model, metric, fraction) -> seed -> macro value
  std::map<std::string, std::map<std::uint64_t, double>> macro;
  for (const ResultRow& row : rows)
    if (row.setting == "macro")
      macro[row.model + "|" + row.metric + "|" + fmt_g(row.fraction)]
           [row.seed] = row.value;

  const auto seed_mean = [&](ModelKind kind, Metric metric,
                             double fraction) -> std::pair<double, std::size_t> {
    const auto it = macro.find(kind_name(kind) + "|" + metric_name(metric) +
                               "|" + fmt_g(fraction));
    if (it == macro.end()) return {0.0, 0};
    double sum = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed : config.seeds) {
      const auto v = it->second.find(seed);
      if (v == it->second.end()) continue;
      sum += v->second;
      ++n;
    }
    return {n ? sum / static_cast<double>(n) : 0.0, n};
  };

  std::ostringstream text;
  std::ostringstream summary_csv;
  summary_csv << "metric,fraction,model,mean_macro,n_seeds\n";
  for (Metric metric : config.metrics) {
    text << "== seed-averaged macro " << metric_name(metric) << " ==\n";
    text << "fraction";
    for (ModelKind kind : config.models) text << "  " << kind_name(kind);
    text << "\n";
    for (double fraction : config.fractions) {
      text << fmt_g(fraction);
      for (ModelKind kind : config.models) {
        const auto [mean, n] = seed_mean(kind, metric, fraction);
        text << "  " << (n == 0 ? std::string("-") : fmt_fixed(mean, 5));
        if (n > 0 && n < config.seeds.size())
          text << "(" << n << "/" << config.seeds.size() << " seeds)";
        summary_csv << metric_name(metric) << "," << fmt_g(fraction) << ","
                    << kind_name(kind) << ","
                    << (n == 0 ? std::string("-") : fmt_full(mean)) << "," << n
                    << "\n";
      }
      text << "\n";
    }
    text << "\n";
  }

  text << "== cold-start macro gain vs nt (fraction 0) ==\n";
  std::ostringstream gains_csv;
  gains_csv << "metric,model,gain_pct\n";
  for (Metric metric : config.metrics) {
    const auto [nt_mean, nt_n] = seed_mean(ModelKind::kNt, metric, 0.0);
    for (ModelKind kind : config.models) {
      const auto [mean, n] = seed_mean(kind, metric, 0.0);
      std::string cell = "-";
      if (n > 0 && nt_n > 0 && nt_mean != 0.0)
        cell = fmt_fixed(100.0 * (mean - nt_mean) / nt_mean, 3);
      text << metric_name(metric) << " " << kind_name(kind) << " " << cell
           << (cell == "-" ? "" : "%") << "\n";
      gains_csv << metric_name(metric) << "," << kind_name(kind) << "," << cell
                << "\n";
    }
  }

  ReportResult result;
  result.text = text.str();
  write_text_atomic(root / "report.txt", result.text);
  write_text_atomic(root / "summary.csv", summary_csv.str());
  write_text_atomic(root / "gains.csv", gains_csv.str());
  return result;
}

}  // namespace cda
