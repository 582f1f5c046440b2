#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cda {

// One scored example. `id` breaks score ties deterministically: ordering is
// always score descending, then id ascending.
struct ScoredRecord {
  std::int64_t id = 0;
  std::int32_t partner = 0;
  double score = 0.0;
  int label = 0;  // 0 or 1
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Area under the ROC curve via the rank-sum formulation; tied scores
// contribute 0.5 per positive/negative pair. Empty when the set lacks both a
// positive and a negative.
std::optional<double> auc_roc(const std::vector<ScoredRecord>& records);

// NDCG@k with binary relevance, DCG = sum rel_i / log2(i + 1) over the top k
// by score, normalised by the ideal ordering. Returns 0 when there are no
// positives. k == 0 means "all records".
double ndcg_at_k(const std::vector<ScoredRecord>& records, std::size_t k);

// Average precision: mean of precision@rank over the ranks that hold a
// positive. Empty when there are no positives.
std::optional<double> average_precision(const std::vector<ScoredRecord>& records);

// Fraction of positives among the top min(k, n) records. k == 0 means all.
double precision_at_k(const std::vector<ScoredRecord>& records, std::size_t k);

// ROC staircase (one point per distinct score threshold, plus the (0,0) and
// (1,1) anchors). Empty under the same condition as auc_roc. The trapezoidal
// area of these points equals auc_roc.
std::optional<std::vector<RocPoint>> roc_points(
    const std::vector<ScoredRecord>& records);

enum class Metric { kAuc, kNdcg, kAp, kPrecision };

Metric metric_from_name(const std::string& name);  // throws ConfigError
std::string metric_name(Metric m);

// k policy for the @k metrics: a fixed cutoff, or "auto" =
// min(1000, ceil(0.1 * n)) per partner.
struct KPolicy {
  bool is_auto = true;
  std::size_t fixed_k = 0;

  static KPolicy auto_k() { return KPolicy{true, 0}; }
  static KPolicy fixed(std::size_t k) { return KPolicy{false, k}; }
  std::size_t resolve(std::size_t n) const;
};

struct PartnerMetric {
  std::int32_t partner = 0;
  std::size_t n_records = 0;
  std::size_t n_positive = 0;
  double value = 0.0;
};

// Aggregate over partners. `macro` is the unweighted mean of per-partner
// values over included partners; `micro` pools every record into one set.
// Partners are excluded (never zero-filled) when the metric is undefined:
// AUC needs both classes, NDCG/AP need at least one positive.
struct EvalReport {
  Metric metric = Metric::kAuc;
  std::size_t k = 0;  // resolved only for micro; per-partner k in `partners`
  double macro = 0.0;
  double micro = 0.0;
  std::size_t n_partners_included = 0;
  std::size_t n_partners_excluded = 0;
  std::vector<PartnerMetric> partners;           // included only, partner asc
  std::vector<std::int32_t> excluded_partners;   // partner asc
};

EvalReport aggregate(const std::vector<ScoredRecord>& records, Metric metric,
                     const KPolicy& k_policy);

}  // namespace cda
