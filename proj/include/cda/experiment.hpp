#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cda/dataset.hpp"
#include "cda/metrics.hpp"
#include "cda/model.hpp"

namespace cda {

// Full protocol description, loaded from a JSON config file. Every key is
// optional; defaults reproduce the desk-scale benchmark.
struct ExperimentConfig {
  GeneratorConfig generator;
  double volume_fraction = 0.8;       // head partner budget share
  double validation_fraction = 0.2;   // share of tail partners for grid search
  TrainConfig train;                  // shared training defaults
  std::map<std::string, TrainConfig> train_per_model;  // resolved overrides
  std::vector<ModelKind> models{ModelKind::kNt, ModelKind::kSda,
                                ModelKind::kIada, ModelKind::kLada};
  // chosen alpha per model and metric; filled from defaults + config
  std::map<std::string, std::map<std::string, double>> alphas;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5,
                                 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> fractions{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<Metric> metrics{Metric::kAuc, Metric::kNdcg, Metric::kAp};
  KPolicy k_policy = KPolicy::auto_k();
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int threads = 1;

  TrainConfig train_for(ModelKind kind, double alpha) const;
  double alpha_for(ModelKind kind, Metric metric) const;  // NT always 1
  void validate() const;  // throws ConfigError
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin);

std::vector<ScoredRecord> score_records(
    const ModelBundle& bundle, const std::vector<ImpressionRecord>& records,
    View view);

// --- grid search -------------------------------------------------------------

struct GridPoint {
  double alpha = 0.0;
  double value = 0.0;  // cold-start macro value on validation partners
};

struct GridSearchResult {
  ModelKind kind = ModelKind::kNt;
  Metric metric = Metric::kAuc;
  std::uint64_t seed = 0;
  double chosen_alpha = 1.0;
  std::vector<GridPoint> table;  // alpha ascending; empty for NT
};

// Trains one base model per grid alpha on head train-day records and picks
// the alpha with the best cold-start macro value on validation partners'
// eval-day records; ties go to the larger alpha. NT reports alpha = 1.
GridSearchResult grid_search(const ExperimentConfig& config, ModelKind kind,
                             Metric metric, std::uint64_t seed);

// --- journey ------------------------------------------------------------------

struct JourneySummary {
  std::size_t cells_run = 0;
  std::size_t cells_skipped = 0;  // already present from an earlier run
  std::size_t cells_failed = 0;
  std::string results_path;
};

// Runs every (model, alpha-group, seed) cell: train base on head train-day,
// then per fraction fine-tune on the nested tail-test train-day sample and
// evaluate on tail-test eval-day records (fraction 0 through the target view,
// larger fractions through the source view). Each cell writes
// cells/<model>_a<alpha>_s<seed>.csv; failures are recorded as .failed files
// and the run continues. results.csv is rebuilt deterministically from the
// cell files on every call, so reruns skip finished cells and fill gaps.
JourneySummary run_journey(const ExperimentConfig& config,
                           const std::string& out_dir);

// --- report -------------------------------------------------------------------

struct ReportResult {
  std::string text;  // the rendered tables, also written to report.txt
};

// Seed-averaged per-fraction macro tables plus cold-start gains vs NT
// (100 * (model - NT) / NT). Missing cells are shown as gaps. Throws
// DataError when results.csv is absent or holds no rows.
ReportResult write_report(const ExperimentConfig& config,
                          const std::string& out_dir);

}  // namespace cda
