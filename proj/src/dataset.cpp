#include "cda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cda/errors.hpp"
#include "cda/rng.hpp"

namespace cda {
namespace {

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// largest-remainder apportionment of `total` items over normalised weights;
// remainder ties go to the smaller index
std::vector<long long> apportion(long long total, const std::vector<double>& w) {
  const std::size_t n = w.size();
  std::vector<long long> out(n, 0);
  std::vector<double> rem(n, 0.0);
  long long assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = static_cast<double>(total) * w[i];
    out[i] = static_cast<long long>(std::floor(q));
    rem[i] = q - std::floor(q);
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rem[a] > rem[b];
  });
  for (long long r = total - assigned; r > 0; --r)
    ++out[order[static_cast<std::size_t>(total - assigned - r)]];
  return out;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_partners < 1) throw ConfigError("generator: n_partners must be >= 1");
  if (n_users < 1) throw ConfigError("generator: n_users must be >= 1");
  if (category_dim < 1) throw ConfigError("generator: category_dim must be >= 1");
  if (campaign_dim < 1) throw ConfigError("generator: campaign_dim must be >= 1");
  if (categories_per_partner < 1 || categories_per_partner > category_dim)
    throw ConfigError(
        "generator: categories_per_partner must be in [1, category_dim]");
  if (zipf_exponent < 0.0) throw ConfigError("generator: zipf_exponent < 0");
  if (partner_noise_scale < 0.0 || label_noise_scale < 0.0)
    throw ConfigError("generator: noise scales must be >= 0");
  if (!(target_positive_rate > 0.0 && target_positive_rate < 1.0))
    throw ConfigError("generator: target_positive_rate must be in (0, 1)");
  if (rate_scale < 0.0) throw ConfigError("generator: rate_scale < 0");
  if (n_train_impressions < 0 || n_eval_impressions < 0 ||
      n_train_impressions + n_eval_impressions < 1)
    throw ConfigError("generator: need at least one impression");
}

// Label-model shape: how much of the label score flows through the additive
// category-affinity term versus the campaign-count term, and how curved the
// count rates are in the user affinities.
constexpr double kCategoryScoreWeight = 1.0;
constexpr double kCampaignScoreWeight = 1.0;
constexpr double kRateSharpness = 1.0;

Dataset generate(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  const int P = config.n_partners;
  const int U = config.n_users;
  const int CD = config.category_dim;
  const int MD = config.campaign_dim;
  const int CPP = config.categories_per_partner;

  Dataset ds;
  ds.config = config;
  ds.seed = seed;

  // budget weights, Zipf over partner rank
  std::vector<double> weights(P);
  double wsum = 0.0;
  for (int p = 0; p < P; ++p) {
    weights[p] = std::pow(static_cast<double>(p + 1), -config.zipf_exponent);
    wsum += weights[p];
  }
  for (double& w : weights) w /= wsum;

  // partner category sets
  Rng partner_rng(mix_seed(seed, "partners"));
  ds.partners.resize(P);
  for (int p = 0; p < P; ++p) {
    PartnerProfile& prof = ds.partners[p];
    prof.id = p;
    prof.budget_weight = weights[p];
    std::vector<std::int32_t> pool(CD);
    std::iota(pool.begin(), pool.end(), 0);
    for (int j = 0; j < CPP; ++j) {
      const std::uint64_t pick =
          j + partner_rng.bounded(static_cast<std::uint64_t>(CD - j));
      std::swap(pool[j], pool[pick]);
    }
    prof.categories.assign(pool.begin(), pool.begin() + CPP);
    std::sort(prof.categories.begin(), prof.categories.end());
  }

  // Shared category -> campaign-coefficient map. Campaign k's rate loads on
  // the affinity dimensions of the partner's own categories, so user-partner
  // counts carry the same affinity structure the labels score — the bridge a
  // transfer term can exploit.
  Rng shared_rng(mix_seed(seed, "shared"));
  std::vector<double> shared(static_cast<std::size_t>(MD) * CD);
  for (double& g : shared) g = shared_rng.normal();

  const double cpp_norm = 1.0 / std::sqrt(static_cast<double>(CPP));
  const double cd_norm = 1.0 / std::sqrt(static_cast<double>(CD));
  for (int p = 0; p < P; ++p) {
    PartnerProfile& prof = ds.partners[p];
    Rng noise_rng(mix_seed(seed, "partner", static_cast<std::uint64_t>(p)));
    prof.coeffs.resize(static_cast<std::size_t>(MD) * CD);
    for (int k = 0; k < MD; ++k) {
      for (int i = 0; i < CD; ++i) {
        const bool own = std::binary_search(prof.categories.begin(),
                                            prof.categories.end(), i);
        const double base =
            own ? shared[static_cast<std::size_t>(k) * CD + i] * cpp_norm : 0.0;
        prof.coeffs[static_cast<std::size_t>(k) * CD + i] =
            base + config.partner_noise_scale * cd_norm * noise_rng.normal();
      }
    }
  }

  // user affinities
  Rng user_rng(mix_seed(seed, "users"));
  std::vector<double> affinity(static_cast<std::size_t>(U) * CD);
  for (double& a : affinity) a = user_rng.normal();

  // latent label model
  Rng label_model_rng(mix_seed(seed, "labelmodel"));
  std::vector<double> beta(MD);
  for (double& b : beta) b = 1.0 + 0.5 * label_model_rng.normal();
  const double camp_norm = 1.0 / std::sqrt(static_cast<double>(MD));

  // impressions, day-major then partner-major
  const std::vector<long long> train_quota =
      apportion(config.n_train_impressions, weights);
  const std::vector<long long> eval_quota =
      apportion(config.n_eval_impressions, weights);
  const long long total =
      config.n_train_impressions + config.n_eval_impressions;
  ds.records.reserve(static_cast<std::size_t>(total));
  std::vector<double> raw_score;
  raw_score.reserve(static_cast<std::size_t>(total));

  std::int64_t next_id = 0;
  for (int day = 0; day < 2; ++day) {
    const std::vector<long long>& quota = day == 0 ? train_quota : eval_quota;
    for (int p = 0; p < P; ++p) {
      const PartnerProfile& prof = ds.partners[p];
      Rng imp_rng(mix_seed(seed, "impr",
                           static_cast<std::uint64_t>(p) * 2 + day));
      for (long long n = 0; n < quota[p]; ++n) {
        ImpressionRecord rec;
        rec.id = next_id++;
        rec.partner = p;
        rec.user = static_cast<std::int32_t>(
            imp_rng.bounded(static_cast<std::uint64_t>(U)));
        rec.day = day;
        const double* a = &affinity[static_cast<std::size_t>(rec.user) * CD];
        rec.campaign.resize(MD);
        for (int k = 0; k < MD; ++k) {
          double z = 0.0;
          for (int i = 0; i < CD; ++i)
            z += prof.coeffs[static_cast<std::size_t>(k) * CD + i] * a[i];
          // Quadratic in the affinity mix: engagement concentrates where a
          // user's affinities align strongly (either sign) with the
          // partner's categories, which no additive function of the
          // category slots reproduces.
          const double rate =
              config.rate_scale * softplus(kRateSharpness * (z * z - 1.0));
          rec.campaign[k] = static_cast<double>(imp_rng.poisson(rate));
        }
        double cat_sum = 0.0;
        for (std::int32_t j : prof.categories) {
          cat_sum += a[j];
          if (a[j] > config.engagement_threshold) rec.categories.push_back(j);
        }
        double score = kCategoryScoreWeight * cat_sum * cpp_norm;
        for (int k = 0; k < MD; ++k)
          score += kCampaignScoreWeight * beta[k] * rec.campaign[k] * camp_norm;
        score += config.label_noise_scale * imp_rng.normal();
        raw_score.push_back(score);
        ds.records.push_back(std::move(rec));
      }
    }
  }

  // calibrate the intercept so the mean positive probability hits the target
  const auto mean_rate = [&](double b0) {
    double s = 0.0;
    for (double r : raw_score) s += sigmoid(r + b0);
    return s / static_cast<double>(raw_score.size());
  };
  double lo = -60.0, hi = 60.0;
  const double f_lo = mean_rate(lo), f_hi = mean_rate(hi);
  if (f_lo > config.target_positive_rate || f_hi < config.target_positive_rate)
    throw CalibrationError(
        "intercept calibration failed: achievable rate range [" + fmt(f_lo) +
        ", " + fmt(f_hi) + "] misses target " +
        fmt(config.target_positive_rate));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_rate(mid) < config.target_positive_rate)
      lo = mid;
    else
      hi = mid;
  }
  ds.label_intercept = 0.5 * (lo + hi);

  // labels, one stream per partner, records visited in id order
  std::vector<Rng> label_rngs;
  label_rngs.reserve(P);
  for (int p = 0; p < P; ++p)
    label_rngs.emplace_back(mix_seed(seed, "labels", static_cast<std::uint64_t>(p)));
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const double prob = sigmoid(raw_score[i] + ds.label_intercept);
    ds.records[i].label =
        label_rngs[ds.records[i].partner].uniform() < prob ? 1 : 0;
  }
  return ds;
}

DatasetSplit split_head_tail(const Dataset& dataset, double volume_fraction,
                             double validation_fraction, std::uint64_t seed) {
  if (!(volume_fraction > 0.0 && volume_fraction <= 1.0))
    throw ConfigError("split: volume_fraction must be in (0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("split: validation_fraction must be in [0, 1)");
  if (dataset.partners.empty())
    throw DataError("split: dataset has no partner profiles");

  // budget weights decrease with id, so the head is an id prefix
  DatasetSplit split;
  double cum = 0.0;
  std::size_t head_n = 0;
  while (head_n < dataset.partners.size() && cum < volume_fraction - 1e-12)
    cum += dataset.partners[head_n++].budget_weight;
  for (std::size_t i = 0; i < head_n; ++i)
    split.head.push_back(dataset.partners[i].id);

  std::vector<std::int32_t> tail;
  for (std::size_t i = head_n; i < dataset.partners.size(); ++i)
    tail.push_back(dataset.partners[i].id);
  const auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(tail.size())));
  Rng split_rng(mix_seed(seed, "split"));
  split_rng.shuffle(tail);
  split.validation.assign(tail.begin(), tail.begin() + n_val);
  split.test.assign(tail.begin() + n_val, tail.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<ImpressionRecord> records_for(
    const std::vector<ImpressionRecord>& records,
    const std::vector<std::int32_t>& partners, int day) {
  std::unordered_set<std::int32_t> keep(partners.begin(), partners.end());
  std::vector<ImpressionRecord> out;
  for (const auto& rec : records)
    if (keep.count(rec.partner) && (day < 0 || rec.day == day))
      out.push_back(rec);
  return out;
}

std::vector<ImpressionRecord> sample_fraction(
    const std::vector<ImpressionRecord>& records, double fraction,
    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ConfigError("sample_fraction: fraction must be in [0, 1]");
  std::map<std::int32_t, std::vector<std::size_t>> by_partner;
  for (std::size_t i = 0; i < records.size(); ++i)
    by_partner[records[i].partner].push_back(i);

  std::vector<std::size_t> picked;
  for (auto& [partner, idx] : by_partner) {
    Rng rng(mix_seed(seed, "fraction", static_cast<std::uint64_t>(partner)));
    rng.shuffle(idx);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    picked.insert(picked.end(), idx.begin(), idx.begin() + take);
  }
  std::sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) {
    return records[a].id < records[b].id;
  });
  std::vector<ImpressionRecord> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(records[i]);
  return out;
}

namespace {

class LineReader {
 public:
  LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path + ": cannot open");
  }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, expected " + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split_fields(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(LineReader& r, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) r.fail("trailing characters in number '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    r.fail("bad number '" + s + "'");
  }
}

long long parse_int(LineReader& r, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) r.fail("trailing characters in integer '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    r.fail("bad integer '" + s + "'");
  }
}

std::vector<std::int32_t> parse_index_list(LineReader& r, const std::string& s) {
  std::vector<std::int32_t> out;
  if (s == "-") return out;
  for (const std::string& f : split_fields(s, ','))
    out.push_back(static_cast<std::int32_t>(parse_int(r, f)));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out = open_out(path);
  out << "cda-dataset 1\n";
  out << "seed " << dataset.seed << "\n";
  out << "dims " << dataset.config.category_dim << " "
      << dataset.config.campaign_dim << "\n";
  out << "meta " << dataset.config.n_partners << " " << dataset.config.n_users
      << " " << fmt(dataset.label_intercept) << "\n";
  out << "records " << dataset.records.size() << "\n";
  for (const auto& rec : dataset.records) {
    out << rec.id << " " << rec.partner << " " << rec.user << " " << rec.day
        << " " << rec.label << " ";
    if (rec.categories.empty()) {
      out << "-";
    } else {
      for (std::size_t i = 0; i < rec.categories.size(); ++i)
        out << (i ? "," : "") << rec.categories[i];
    }
    out << " ";
    if (rec.campaign.empty()) {
      out << "-";
    } else {
      for (std::size_t i = 0; i < rec.campaign.size(); ++i)
        out << (i ? "," : "") << fmt(rec.campaign[i]);
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  LineReader r(path);
  Dataset ds;
  {
    std::istringstream head(r.require("header"));
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != "cda-dataset" || version != 1)
      r.fail("not a cda-dataset version 1 file");
  }
  std::string kw;
  {
    std::istringstream f(r.require("seed line"));
    if (!(f >> kw >> ds.seed) || kw != "seed") r.fail("bad seed line");
  }
  {
    std::istringstream f(r.require("dims line"));
    if (!(f >> kw >> ds.config.category_dim >> ds.config.campaign_dim) ||
        kw != "dims")
      r.fail("bad dims line");
  }
  {
    std::istringstream f(r.require("meta line"));
    if (!(f >> kw >> ds.config.n_partners >> ds.config.n_users >>
          ds.label_intercept) ||
        kw != "meta")
      r.fail("bad meta line");
  }
  std::size_t n_records = 0;
  {
    std::istringstream f(r.require("records line"));
    if (!(f >> kw >> n_records) || kw != "records") r.fail("bad records line");
  }
  ds.records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const std::string line = r.require("record");
    const std::vector<std::string> fields = split_fields(line, ' ');
    if (fields.size() != 7) r.fail("record needs 7 fields");
    ImpressionRecord rec;
    rec.id = parse_int(r, fields[0]);
    rec.partner = static_cast<std::int32_t>(parse_int(r, fields[1]));
    rec.user = static_cast<std::int32_t>(parse_int(r, fields[2]));
    rec.day = static_cast<std::int32_t>(parse_int(r, fields[3]));
    rec.label = static_cast<int>(parse_int(r, fields[4]));
    if (rec.label != 0 && rec.label != 1) r.fail("label must be 0 or 1");
    rec.categories = parse_index_list(r, fields[5]);
    for (std::int32_t c : rec.categories)
      if (c < 0 || c >= ds.config.category_dim) r.fail("category out of range");
    if (fields[6] != "-")
      for (const std::string& f : split_fields(fields[6], ','))
        rec.campaign.push_back(parse_double(r, f));
    if (rec.campaign.size() !=
        static_cast<std::size_t>(ds.config.campaign_dim))
      r.fail("campaign slot count mismatch");
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_profiles(const std::string& path, const Dataset& dataset) {
  std::ofstream out = open_out(path);
  out << "cda-profiles 1\n";
  out << "dims " << dataset.config.category_dim << " "
      << dataset.config.campaign_dim << "\n";
  out << "partners " << dataset.partners.size() << "\n";
  for (const auto& prof : dataset.partners) {
    out << prof.id << " " << fmt(prof.budget_weight) << " ";
    for (std::size_t i = 0; i < prof.categories.size(); ++i)
      out << (i ? "," : "") << prof.categories[i];
    out << " ";
    for (std::size_t i = 0; i < prof.coeffs.size(); ++i)
      out << (i ? "," : "") << fmt(prof.coeffs[i]);
    out << "\n";
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void read_profiles(const std::string& path, Dataset& dataset) {
  LineReader r(path);
  {
    std::istringstream head(r.require("header"));
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != "cda-profiles" || version != 1)
      r.fail("not a cda-profiles version 1 file");
  }
  int category_dim = 0, campaign_dim = 0;
  {
    std::istringstream f(r.require("dims"));
    std::string kw;
    if (!(f >> kw >> category_dim >> campaign_dim) || kw != "dims")
      r.fail("bad dims line");
  }
  if (category_dim != dataset.config.category_dim ||
      campaign_dim != dataset.config.campaign_dim)
    r.fail("profile dims do not match dataset");
  std::size_t n = 0;
  {
    std::istringstream f(r.require("partners"));
    std::string kw;
    if (!(f >> kw >> n) || kw != "partners") r.fail("bad partners line");
  }
  dataset.partners.clear();
  dataset.partners.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string line = r.require("partner");
    const std::vector<std::string> fields = split_fields(line, ' ');
    if (fields.size() != 4) r.fail("partner needs 4 fields");
    PartnerProfile prof;
    prof.id = static_cast<std::int32_t>(parse_int(r, fields[0]));
    prof.budget_weight = parse_double(r, fields[1]);
    prof.categories = parse_index_list(r, fields[2]);
    for (const std::string& f : split_fields(fields[3], ','))
      prof.coeffs.push_back(parse_double(r, f));
    if (prof.coeffs.size() !=
        static_cast<std::size_t>(category_dim) * campaign_dim)
      r.fail("coefficient count mismatch");
    dataset.partners.push_back(std::move(prof));
  }
}

namespace {

void write_id_line(std::ofstream& out, const std::string& kw,
                   const std::vector<std::int32_t>& ids) {
  out << kw << " " << ids.size() << " ";
  if (ids.empty()) {
    out << "-";
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
  }
  out << "\n";
}

std::vector<std::int32_t> read_id_line(LineReader& r, const std::string& kw) {
  const std::string line = r.require(kw + " line");
  const std::vector<std::string> fields = split_fields(line, ' ');
  if (fields.size() != 3 || fields[0] != kw) r.fail("expected '" + kw + "' line");
  const long long n = parse_int(r, fields[1]);
  std::vector<std::int32_t> ids = parse_index_list(r, fields[2]);
  if (ids.size() != static_cast<std::size_t>(n)) r.fail(kw + " count mismatch");
  return ids;
}

}  // namespace

void write_split(const std::string& path, const DatasetSplit& split) {
  std::ofstream out = open_out(path);
  out << "cda-split 1\n";
  write_id_line(out, "head", split.head);
  write_id_line(out, "validation", split.validation);
  write_id_line(out, "test", split.test);
  if (!out) throw DataError("write failed for '" + path + "'");
}

DatasetSplit read_split(const std::string& path) {
  LineReader r(path);
  {
    std::istringstream head(r.require("header"));
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != "cda-split" || version != 1)
      r.fail("not a cda-split version 1 file");
  }
  DatasetSplit split;
  split.head = read_id_line(r, "head");
  split.validation = read_id_line(r, "validation");
  split.test = read_id_line(r, "test");
  return split;
}

}  // namespace cda
