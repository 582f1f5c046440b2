#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cda {

// Synthetic campaign-log generator configuration. Defaults correspond to the
// full benchmark scale; tests shrink them.
struct GeneratorConfig {
  int n_partners = 404;
  int n_users = 5000;
  int category_dim = 16;
  int campaign_dim = 20;
  int categories_per_partner = 3;
  double zipf_exponent = 0.85;       // budget weight of partner p ~ (p+1)^-s
  double partner_noise_scale = 0.5;  // per-partner coefficient perturbation
  double label_noise_scale = 0.5;    // latent label-score noise
  double target_positive_rate = 0.05;
  double engagement_threshold = 0.4;  // affinity cut for category slots
  double rate_scale = 1.0;            // campaign-count Poisson rate scale
  long long n_train_impressions = 50000;  // day 0
  long long n_eval_impressions = 150000;   // day 1

  void validate() const;  // throws ConfigError
};

struct PartnerProfile {
  std::int32_t id = 0;
  double budget_weight = 0.0;
  std::vector<std::int32_t> categories;  // sorted, distinct
  std::vector<double> coeffs;  // campaign_dim x category_dim, row-major
};

struct ImpressionRecord {
  std::int64_t id = 0;
  std::int32_t partner = 0;
  std::int32_t user = 0;
  std::int32_t day = 0;  // 0 = train day, 1 = eval day
  int label = 0;
  std::vector<std::int32_t> categories;  // active category slots, sorted
  std::vector<double> campaign;          // campaign_dim interaction counts
};

struct Dataset {
  GeneratorConfig config;
  std::uint64_t seed = 0;
  double label_intercept = 0.0;  // calibrated so mean positive rate hits target
  std::vector<PartnerProfile> partners;
  std::vector<ImpressionRecord> records;  // id order
};

// Deterministic generation: identical (config, seed) gives identical output.
Dataset generate(const GeneratorConfig& config, std::uint64_t seed);

// Partition of partner ids by budget volume. `head` is the smallest prefix of
// partners (budget descending) whose cumulative weight reaches
// volume_fraction; the tail is split into validation and test partners.
struct DatasetSplit {
  std::vector<std::int32_t> head;
  std::vector<std::int32_t> validation;
  std::vector<std::int32_t> test;
};

DatasetSplit split_head_tail(const Dataset& dataset, double volume_fraction,
                             double validation_fraction, std::uint64_t seed);

// Per-partner nested subsample: for any f1 <= f2 the f1 sample is a subset of
// the f2 sample (same seed). Each partner contributes round(f * n) records.
// Output preserves id order.
std::vector<ImpressionRecord> sample_fraction(
    const std::vector<ImpressionRecord>& records, double fraction,
    std::uint64_t seed);

std::vector<ImpressionRecord> records_for(
    const std::vector<ImpressionRecord>& records,
    const std::vector<std::int32_t>& partners, int day);

// Text round-trip. Readers throw ParseError with a line number on bad input.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);  // partners left empty
void write_profiles(const std::string& path, const Dataset& dataset);
void read_profiles(const std::string& path, Dataset& dataset);
void write_split(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split(const std::string& path);

}  // namespace cda
