#include "cda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cda/errors.hpp"

namespace cda {
namespace {

// score descending, id ascending
void rank_sort(std::vector<ScoredRecord>& r) {
  std::sort(r.begin(), r.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

std::size_t count_positive(const std::vector<ScoredRecord>& r) {
  std::size_t n = 0;
  for (const auto& rec : r) n += rec.label != 0 ? 1u : 0u;
  return n;
}

}  // namespace

std::optional<double> auc_roc(const std::vector<ScoredRecord>& records) {
  const std::size_t n = records.size();
  const std::size_t n_pos = count_positive(records);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<ScoredRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredRecord& a, const ScoredRecord& b) {
              return a.score < b.score;
            });
  // average ranks over tied scores; rank sum of positives
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && sorted[j].score == sorted[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (sorted[t].label != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double ndcg_at_k(const std::vector<ScoredRecord>& records, std::size_t k) {
  const std::size_t n = records.size();
  const std::size_t n_pos = count_positive(records);
  if (n == 0 || n_pos == 0) return 0.0;
  const std::size_t kk = std::min(k == 0 ? n : k, n);

  std::vector<ScoredRecord> sorted = records;
  rank_sort(sorted);
  double dcg = 0.0;
  for (std::size_t r = 0; r < kk; ++r)
    if (sorted[r].label != 0) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(kk, n_pos); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

std::optional<double> average_precision(const std::vector<ScoredRecord>& records) {
  const std::size_t n_pos = count_positive(records);
  if (n_pos == 0) return std::nullopt;

  std::vector<ScoredRecord> sorted = records;
  rank_sort(sorted);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    if (sorted[r].label != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(n_pos);
}

double precision_at_k(const std::vector<ScoredRecord>& records, std::size_t k) {
  const std::size_t n = records.size();
  if (n == 0) return 0.0;
  const std::size_t kk = std::min(k == 0 ? n : k, n);

  std::vector<ScoredRecord> sorted = records;
  rank_sort(sorted);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < kk; ++r) hits += sorted[r].label != 0 ? 1u : 0u;
  return static_cast<double>(hits) / static_cast<double>(kk);
}

std::optional<std::vector<RocPoint>> roc_points(
    const std::vector<ScoredRecord>& records) {
  const std::size_t n = records.size();
  const std::size_t n_pos = count_positive(records);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<ScoredRecord> sorted = records;
  rank_sort(sorted);
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  // one point per distinct score; ties advance tp and fp together, so the
  // trapezoid through the point reproduces the 0.5-per-tied-pair convention
  while (i < n) {
    std::size_t j = i;
    while (j < n && sorted[j].score == sorted[i].score) ++j;
    for (std::size_t t = i; t < j; ++t) {
      if (sorted[t].label != 0)
        ++tp;
      else
        ++fp;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                   static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  return pts;
}

Metric metric_from_name(const std::string& name) {
  if (name == "auc" || name == "auc-roc") return Metric::kAuc;
  if (name == "ndcg") return Metric::kNdcg;
  if (name == "ap" || name == "average-precision") return Metric::kAp;
  if (name == "precision" || name == "precision-at-k") return Metric::kPrecision;
  throw ConfigError("unknown metric '" + name + "'");
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kAuc: return "auc";
    case Metric::kNdcg: return "ndcg";
    case Metric::kAp: return "ap";
    case Metric::kPrecision: return "precision";
  }
  throw ConfigError("bad metric enum");
}

std::size_t KPolicy::resolve(std::size_t n) const {
  if (!is_auto) return fixed_k;
  if (n == 0) return 0;
  const auto tenth = static_cast<std::size_t>(
      std::ceil(0.1 * static_cast<double>(n)));
  return std::min<std::size_t>(1000, tenth);
}

EvalReport aggregate(const std::vector<ScoredRecord>& records, Metric metric,
                     const KPolicy& k_policy) {
  EvalReport report;
  report.metric = metric;
  report.k = k_policy.resolve(records.size());

  std::map<std::int32_t, std::vector<ScoredRecord>> by_partner;
  for (const auto& rec : records) by_partner[rec.partner].push_back(rec);

  const auto eval_one =
      [&](const std::vector<ScoredRecord>& set) -> std::optional<double> {
    const std::size_t k = k_policy.resolve(set.size());
    switch (metric) {
      case Metric::kAuc:
        return auc_roc(set);
      case Metric::kNdcg:
        if (count_positive(set) == 0) return std::nullopt;
        return ndcg_at_k(set, k);
      case Metric::kAp:
        return average_precision(set);
      case Metric::kPrecision:
        return precision_at_k(set, k);
    }
    return std::nullopt;
  };

  double sum = 0.0, comp = 0.0;  // Kahan
  for (const auto& [partner, set] : by_partner) {
    const std::optional<double> value = eval_one(set);
    if (!value) {
      report.excluded_partners.push_back(partner);
      continue;
    }
    PartnerMetric pm;
    pm.partner = partner;
    pm.n_records = set.size();
    pm.n_positive = count_positive(set);
    pm.value = *value;
    report.partners.push_back(pm);
    const double y = *value - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  report.n_partners_included = report.partners.size();
  report.n_partners_excluded = report.excluded_partners.size();
  report.macro = report.partners.empty()
                     ? 0.0
                     : sum / static_cast<double>(report.partners.size());
  report.micro = eval_one(records).value_or(0.0);
  return report;
}

}  // namespace cda
