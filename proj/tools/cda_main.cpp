#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cda/checkpoint.hpp"
#include "cda/errors.hpp"
#include "cda/experiment.hpp"
#include "cda/kernels.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string ckpt_name(const std::string& model, double alpha,
                      std::uint64_t seed, double fraction) {
  std::string name = "ckpt_" + model + "_a" + fmt_g(alpha) + "_s" +
                     std::to_string(seed);
  if (fraction == 0.0)
    name += "_base.ckpt";
  else
    name += "_f" + fmt_g(fraction) + ".ckpt";
  return name;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string model = "nt";
  std::string metric;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double fraction = 0.0;
  long long k = 0;
  bool k_given = false;
};

std::uint64_t pick_seed(const CommonArgs& args, const cda::ExperimentConfig& config) {
  return args.seed_given ? args.seed : config.seeds.front();
}

cda::KPolicy pick_k(const CommonArgs& args, const cda::ExperimentConfig& config) {
  if (!args.k_given) return config.k_policy;
  if (args.k < 1) throw cda::ConfigError("--k must be >= 1");
  return cda::KPolicy::fixed(static_cast<std::size_t>(args.k));
}

int cmd_generate(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  fs::create_directories(args.out_dir);
  const std::vector<std::uint64_t> seeds =
      args.seed_given ? std::vector<std::uint64_t>{args.seed} : config.seeds;
  for (std::uint64_t seed : seeds) {
    const cda::Dataset dataset = cda::generate(config.generator, seed);
    const cda::DatasetSplit split = cda::split_head_tail(
        dataset, config.volume_fraction, config.validation_fraction, seed);
    const std::string tag = "_s" + std::to_string(seed) + ".txt";
    cda::write_dataset(args.out_dir + "/dataset" + tag, dataset);
    cda::write_profiles(args.out_dir + "/profiles" + tag, dataset);
    cda::write_split(args.out_dir + "/split" + tag, split);
    std::cout << "seed " << seed << ": " << dataset.records.size()
              << " records, " << split.head.size() << " head / "
              << split.validation.size() << " validation / "
              << split.test.size() << " test partners\n";
  }
  return 0;
}

int cmd_grid_search(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::ModelKind kind = cda::kind_from_name(args.model);
  const cda::Metric metric = cda::metric_from_name(
      args.metric.empty() ? "auc" : args.metric);
  const std::uint64_t seed = pick_seed(args, config);
  const cda::GridSearchResult result =
      cda::grid_search(config, kind, metric, seed);
  for (const cda::GridPoint& point : result.table)
    std::cout << "alpha " << fmt_g(point.alpha) << "  macro "
              << cda::metric_name(metric) << " " << point.value << "\n";
  std::cout << "chosen alpha: " << fmt_g(result.chosen_alpha) << "\n";
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    const std::string path = args.out_dir + "/grid_" + args.model + "_" +
                             cda::metric_name(metric) + "_s" +
                             std::to_string(seed) + ".csv";
    std::ofstream out(path);
    if (!out) throw cda::DataError("cannot open '" + path + "' for writing");
    out << "alpha,value,chosen\n";
    for (const cda::GridPoint& point : result.table)
      out << fmt_g(point.alpha) << "," << point.value << ","
          << (point.alpha == result.chosen_alpha ? 1 : 0) << "\n";
    if (result.table.empty())  // NT by convention
      out << fmt_g(result.chosen_alpha) << ",-,1\n";
  }
  return 0;
}

int cmd_train_base(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::ModelKind kind = cda::kind_from_name(args.model);
  const cda::Metric metric = cda::metric_from_name(
      args.metric.empty() ? cda::metric_name(config.metrics.front())
                          : args.metric);
  const std::uint64_t seed = pick_seed(args, config);
  const double alpha = config.alpha_for(kind, metric);

  const cda::Dataset dataset = cda::generate(config.generator, seed);
  const cda::DatasetSplit split = cda::split_head_tail(
      dataset, config.volume_fraction, config.validation_fraction, seed);
  const cda::FeatureSchema schema{dataset.config.category_dim,
                                  dataset.config.campaign_dim};
  const cda::ModelBundle bundle = cda::train_base(
      kind, schema, config.train_for(kind, alpha),
      cda::records_for(dataset.records, split.head, 0), seed);

  fs::create_directories(args.out_dir);
  const std::string path =
      args.out_dir + "/" + ckpt_name(args.model, alpha, seed, 0.0);
  cda::save_checkpoint(path, bundle, {cda::Phase::kBase, 0.0});
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_fine_tune(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::ModelKind kind = cda::kind_from_name(args.model);
  const cda::Metric metric = cda::metric_from_name(
      args.metric.empty() ? cda::metric_name(config.metrics.front())
                          : args.metric);
  const std::uint64_t seed = pick_seed(args, config);
  const double alpha = config.alpha_for(kind, metric);
  if (!(args.fraction >= 0.0 && args.fraction <= 1.0))
    throw cda::ConfigError("--fraction must lie in [0, 1]");

  const std::string base_path =
      args.out_dir + "/" + ckpt_name(args.model, alpha, seed, 0.0);
  cda::ModelBundle bundle = cda::load_checkpoint(base_path);
  const cda::Dataset dataset = cda::generate(config.generator, seed);
  cda::require_schema(bundle, cda::FeatureSchema{dataset.config.category_dim,
                                                 dataset.config.campaign_dim});
  const cda::DatasetSplit split = cda::split_head_tail(
      dataset, config.volume_fraction, config.validation_fraction, seed);
  const std::vector<cda::ImpressionRecord> sample = cda::sample_fraction(
      cda::records_for(dataset.records, split.test, 0), args.fraction, seed);
  cda::fine_tune(bundle, sample, seed);

  const std::string path =
      args.out_dir + "/" + ckpt_name(args.model, alpha, seed, args.fraction);
  cda::save_checkpoint(path, bundle,
                       {cda::Phase::kFineTuned, args.fraction});
  std::cout << "fine-tuned on " << sample.size() << " records; wrote " << path
            << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::ModelKind kind = cda::kind_from_name(args.model);
  const std::vector<cda::Metric> metrics =
      args.metric.empty()
          ? config.metrics
          : std::vector<cda::Metric>{cda::metric_from_name(args.metric)};
  const std::uint64_t seed = pick_seed(args, config);
  // the checkpoint is named after the metric's alpha; with an explicit
  // --metric the matching checkpoint is picked, otherwise the first metric's
  const double alpha = config.alpha_for(kind, metrics.front());
  const cda::KPolicy k_policy = pick_k(args, config);

  const std::string path =
      args.out_dir + "/" + ckpt_name(args.model, alpha, seed, args.fraction);
  const cda::ModelBundle bundle = cda::load_checkpoint(path);
  const cda::Dataset dataset = cda::generate(config.generator, seed);
  cda::require_schema(bundle, cda::FeatureSchema{dataset.config.category_dim,
                                                 dataset.config.campaign_dim});
  const cda::DatasetSplit split = cda::split_head_tail(
      dataset, config.volume_fraction, config.validation_fraction, seed);
  const std::vector<cda::ImpressionRecord> test_eval =
      cda::records_for(dataset.records, split.test, 1);
  if (test_eval.empty())
    throw cda::DataError("no tail-test eval-day records to evaluate");
  const std::vector<cda::ScoredRecord> scored = cda::score_records(
      bundle, test_eval,
      args.fraction == 0.0 ? cda::View::kTarget : cda::View::kSource);

  std::ostringstream csv;
  csv << "model,fraction,setting,metric,k,value,n_partners,seed\n";
  for (cda::Metric metric : metrics) {
    const cda::EvalReport report = cda::aggregate(scored, metric, k_policy);
    const long long k_col =
        k_policy.is_auto ? 0 : static_cast<long long>(k_policy.fixed_k);
    std::cout << cda::metric_name(metric) << ": macro " << report.macro
              << "  micro " << report.micro << "  ("
              << report.n_partners_included << " partners, "
              << report.n_partners_excluded << " excluded)\n";
    for (const char* setting : {"macro", "micro"}) {
      char value[64];
      std::snprintf(value, sizeof value, "%.17g",
                    setting == std::string("macro") ? report.macro
                                                    : report.micro);
      csv << args.model << "," << fmt_g(args.fraction) << "," << setting << ","
          << cda::metric_name(metric) << "," << k_col << "," << value << ","
          << report.n_partners_included << "," << seed << "\n";
    }
  }
  const std::string eval_path = args.out_dir + "/eval_" + args.model + "_a" +
                                fmt_g(alpha) + "_s" + std::to_string(seed) +
                                "_f" + fmt_g(args.fraction) + ".csv";
  std::ofstream out(eval_path);
  if (!out) throw cda::DataError("cannot open '" + eval_path + "' for writing");
  out << csv.str();
  return 0;
}

int cmd_journey(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::JourneySummary summary = cda::run_journey(config, args.out_dir);
  std::cout << "cells run " << summary.cells_run << ", skipped "
            << summary.cells_skipped << ", failed " << summary.cells_failed
            << "\nresults: " << summary.results_path << "\n";
  return summary.cells_failed > 0 ? 3 : 0;
}

int cmd_report(const CommonArgs& args) {
  const cda::ExperimentConfig config =
      cda::load_experiment_config(args.config_path);
  const cda::ReportResult result = cda::write_report(config, args.out_dir);
  std::cout << result.text;
  return 0;
}

constexpr const char* kConfigHelp = R"(Config file (JSON); every key is optional:
  generator: n_partners 404, n_users 5000, category_dim 16, campaign_dim 20,
             categories_per_partner 3, zipf_exponent 0.85,
             partner_noise_scale 0.5, label_noise_scale 0.5,
             target_positive_rate 0.05, engagement_threshold 0.4,
             rate_scale 1.0, n_train_impressions 50000, n_eval_impressions 150000
  split:     volume_fraction 0.8, validation_fraction 0.2
  train:     hidden_dim 64, latent_dim 64, dropout 0.5, learning_rate 0.01,
             batch_size 256, epochs 5, fine_tune_epochs 2
  train_per_model: {model: partial train block}
  models:    ["nt","sda","iada","lada"]
  alphas:    per model/metric transfer weights; defaults
             sda 0.5; iada 0.9; lada 0.2; nt always 1
  alpha_grid: [0.1 .. 1.0 step 0.1]
  fractions: [0, 0.2, 0.4, 0.6, 0.8, 1.0]
  metrics:   ["auc","ndcg","ap"]
  k:         "auto" (min(1000, ceil(0.1 n)) per partner) or a fixed integer
  seeds:     [1 .. 10]
  threads:   1
)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cda: cold-start ad-engagement prediction via domain adaptation.\n"
      "Trains NT/SDA/IADA/LADA models on synthetic campaign logs and replays\n"
      "the fine-tuning journey from zero to full campaign data."};
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    auto* out = cmd->add_option("--out", args.out_dir, "output directory");
    if (needs_out) out->required();
    return cmd;
  };
  const auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", args.seed, "seed (default: first config seed)")
        ->each([&](const std::string&) { args.seed_given = true; });
  };

  CLI::App* generate = add_common(
      app.add_subcommand("generate", "write dataset/profile/split files"), true);
  add_seed(generate);

  CLI::App* grid = add_common(
      app.add_subcommand("grid-search",
                         "pick the transfer weight alpha on validation "
                         "partners (cold start)"),
      false);
  grid->add_option("--model", args.model, "nt|sda|iada|lada")->required();
  grid->add_option("--metric", args.metric, "auc|ndcg|ap (default auc)");
  add_seed(grid);

  CLI::App* train = add_common(
      app.add_subcommand("train-base", "train a base model on head partners"),
      true);
  train->add_option("--model", args.model, "nt|sda|iada|lada")->required();
  train->add_option("--metric", args.metric,
                    "metric whose alpha to train with (default: first "
                    "configured metric)");
  add_seed(train);

  CLI::App* tune = add_common(
      app.add_subcommand("fine-tune",
                         "fine-tune a base checkpoint on a fraction of "
                         "tail-test train-day data"),
      true);
  tune->add_option("--model", args.model, "nt|sda|iada|lada")->required();
  tune->add_option("--metric", args.metric,
                   "metric whose alpha names the checkpoint");
  add_seed(tune);
  tune->add_option("--fraction", args.fraction, "fine-tune fraction in [0, 1]")
      ->required();

  CLI::App* eval = add_common(
      app.add_subcommand("evaluate",
                         "evaluate a checkpoint on tail-test eval-day records"),
      true);
  eval->add_option("--model", args.model, "nt|sda|iada|lada")->required();
  eval->add_option("--metric", args.metric,
                   "single metric (default: all configured)");
  add_seed(eval);
  eval->add_option("--fraction", args.fraction,
                   "0 = cold start (target view); otherwise source view");
  eval->add_option("--k", args.k, "fixed top-k cutoff (default: config policy)")
      ->each([&](const std::string&) { args.k_given = true; });

  CLI::App* journey = add_common(
      app.add_subcommand("journey",
                         "run the full fraction journey for every model and "
                         "seed"),
      true);

  CLI::App* report = add_common(
      app.add_subcommand("report",
                         "summarise journey results and cold-start gains"),
      true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    if (generate->parsed()) return cmd_generate(args);
    if (grid->parsed()) return cmd_grid_search(args);
    if (train->parsed()) return cmd_train_base(args);
    if (tune->parsed()) return cmd_fine_tune(args);
    if (eval->parsed()) return cmd_evaluate(args);
    if (journey->parsed()) return cmd_journey(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const cda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const cda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
