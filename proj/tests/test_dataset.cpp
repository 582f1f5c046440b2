#include "cda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cda/errors.hpp"
#include "doctest.h"

using namespace cda;

namespace {

GeneratorConfig tiny_config() {
  GeneratorConfig cfg;
  cfg.n_partners = 8;
  cfg.n_users = 50;
  cfg.category_dim = 6;
  cfg.campaign_dim = 5;
  cfg.categories_per_partner = 2;
  cfg.n_train_impressions = 400;
  cfg.n_eval_impressions = 300;
  return cfg;
}

bool same_records(const std::vector<ImpressionRecord>& a,
                  const std::vector<ImpressionRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.id != y.id || x.partner != y.partner || x.user != y.user ||
        x.day != y.day || x.label != y.label || x.categories != y.categories ||
        x.campaign != y.campaign)
      return false;
  }
  return true;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::string temp_path(const std::string& name) {
  return "/tmp/cda_test_" + name;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_CASE("generation is deterministic in (config, seed)") {
  const GeneratorConfig cfg = tiny_config();
  const Dataset a = generate(cfg, 7);
  const Dataset b = generate(cfg, 7);
  CHECK(a.label_intercept == b.label_intercept);
  REQUIRE(a.partners.size() == b.partners.size());
  for (std::size_t p = 0; p < a.partners.size(); ++p) {
    CHECK(a.partners[p].categories == b.partners[p].categories);
    CHECK(a.partners[p].coeffs == b.partners[p].coeffs);
    CHECK(a.partners[p].budget_weight == b.partners[p].budget_weight);
  }
  CHECK(same_records(a.records, b.records));

  const Dataset c = generate(cfg, 8);
  CHECK(!same_records(a.records, c.records));
}

TEST_CASE("record ids, day totals and partner quotas") {
  const GeneratorConfig cfg = tiny_config();
  const Dataset ds = generate(cfg, 3);
  REQUIRE(ds.records.size() ==
          static_cast<std::size_t>(cfg.n_train_impressions + cfg.n_eval_impressions));

  long long train = 0, eval = 0;
  std::map<std::int32_t, long long> per_partner_train;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    CHECK(rec.id == static_cast<std::int64_t>(i));  // id order
    CHECK(rec.partner >= 0);
    CHECK(rec.partner < cfg.n_partners);
    CHECK(rec.user >= 0);
    CHECK(rec.user < cfg.n_users);
    CHECK((rec.day == 0 || rec.day == 1));
    CHECK((rec.label == 0 || rec.label == 1));
    CHECK(rec.campaign.size() == static_cast<std::size_t>(cfg.campaign_dim));
    for (double c : rec.campaign) {
      CHECK(c >= 0.0);
      CHECK(c == std::floor(c));  // Poisson counts
    }
    if (rec.day == 0) {
      ++train;
      ++per_partner_train[rec.partner];
    } else {
      ++eval;
    }
  }
  CHECK(train == cfg.n_train_impressions);
  CHECK(eval == cfg.n_eval_impressions);

  // largest-remainder apportionment: every quota is floor or ceil of its share
  for (const auto& prof : ds.partners) {
    const double share =
        prof.budget_weight * static_cast<double>(cfg.n_train_impressions);
    const long long got = per_partner_train[prof.id];
    CHECK(got >= static_cast<long long>(std::floor(share)));
    CHECK(got <= static_cast<long long>(std::floor(share)) + 1);
  }
}

TEST_CASE("budget weights follow the zipf law") {
  const Dataset ds = generate(tiny_config(), 1);
  double sum = 0.0;
  for (const auto& prof : ds.partners) sum += prof.budget_weight;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t p = 1; p < ds.partners.size(); ++p)
    CHECK(ds.partners[p].budget_weight < ds.partners[p - 1].budget_weight);
  CHECK(ds.partners[0].budget_weight / ds.partners[1].budget_weight ==
        doctest::Approx(std::pow(2.0, 0.85)).epsilon(1e-12));
}

TEST_CASE("partner categories are sorted distinct subsets") {
  const GeneratorConfig cfg = tiny_config();
  const Dataset ds = generate(cfg, 11);
  for (const auto& prof : ds.partners) {
    REQUIRE(prof.categories.size() ==
            static_cast<std::size_t>(cfg.categories_per_partner));
    CHECK(std::is_sorted(prof.categories.begin(), prof.categories.end()));
    CHECK(std::adjacent_find(prof.categories.begin(), prof.categories.end()) ==
          prof.categories.end());
    for (std::int32_t c : prof.categories) {
      CHECK(c >= 0);
      CHECK(c < cfg.category_dim);
    }
    CHECK(prof.coeffs.size() ==
          static_cast<std::size_t>(cfg.campaign_dim) * cfg.category_dim);
  }

  // record category slots come from the partner's own set
  for (const auto& rec : ds.records) {
    CHECK(std::is_sorted(rec.categories.begin(), rec.categories.end()));
    const auto& owned = ds.partners[rec.partner].categories;
    for (std::int32_t c : rec.categories)
      CHECK(std::find(owned.begin(), owned.end(), c) != owned.end());
  }
}

TEST_CASE("intercept calibration hits the target positive rate") {
  GeneratorConfig cfg = tiny_config();
  cfg.n_partners = 20;
  cfg.n_users = 300;
  cfg.category_dim = 8;
  cfg.campaign_dim = 10;
  cfg.categories_per_partner = 3;
  cfg.n_train_impressions = 5000;
  cfg.n_eval_impressions = 5000;
  const Dataset ds = generate(cfg, 21);
  double positives = 0;
  for (const auto& rec : ds.records) positives += rec.label;
  const double rate = positives / static_cast<double>(ds.records.size());
  CHECK(rate > 0.04);
  CHECK(rate < 0.06);
}

TEST_CASE("labels correlate with the engineered signal") {
  GeneratorConfig cfg = tiny_config();
  cfg.n_partners = 12;
  cfg.n_users = 200;
  cfg.n_train_impressions = 4000;
  cfg.n_eval_impressions = 0;
  const Dataset ds = generate(cfg, 31);

  double pos_with_slot = 0, n_with_slot = 0, pos_without = 0, n_without = 0;
  std::vector<double> totals;
  totals.reserve(ds.records.size());
  for (const auto& rec : ds.records) {
    double t = 0;
    for (double c : rec.campaign) t += c;
    totals.push_back(t);
    if (!rec.categories.empty()) {
      pos_with_slot += rec.label;
      ++n_with_slot;
    } else {
      pos_without += rec.label;
      ++n_without;
    }
  }
  REQUIRE(n_with_slot > 100);
  REQUIRE(n_without > 100);
  CHECK(pos_with_slot / n_with_slot > pos_without / n_without);

  std::vector<double> sorted = totals;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  double pos_hi = 0, n_hi = 0, pos_lo = 0, n_lo = 0;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (totals[i] > median) {
      pos_hi += ds.records[i].label;
      ++n_hi;
    } else {
      pos_lo += ds.records[i].label;
      ++n_lo;
    }
  }
  CHECK(pos_hi / n_hi > pos_lo / n_lo);
}

TEST_CASE("config validation") {
  GeneratorConfig cfg = tiny_config();
  cfg.n_partners = 0;
  CHECK_THROWS_AS(generate(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.categories_per_partner = 7;  // > category_dim
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.target_positive_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.target_positive_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.label_noise_scale = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.n_train_impressions = 0;
  cfg.n_eval_impressions = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_NOTHROW(tiny_config().validate());
}

TEST_CASE("head/tail split partitions the partners by volume") {
  const Dataset ds = generate(tiny_config(), 5);
  const DatasetSplit split = split_head_tail(ds, 0.5, 0.25, 9);

  // head is the minimal id prefix reaching half the volume
  REQUIRE(!split.head.empty());
  for (std::size_t i = 0; i < split.head.size(); ++i)
    CHECK(split.head[i] == static_cast<std::int32_t>(i));
  double cum = 0;
  for (std::int32_t p : split.head) cum += ds.partners[p].budget_weight;
  CHECK(cum >= 0.5 - 1e-12);
  cum -= ds.partners[split.head.back()].budget_weight;
  CHECK(cum < 0.5);

  // validation/test partition the tail
  std::set<std::int32_t> seen(split.head.begin(), split.head.end());
  for (std::int32_t p : split.validation) CHECK(seen.insert(p).second);
  for (std::int32_t p : split.test) CHECK(seen.insert(p).second);
  CHECK(seen.size() == ds.partners.size());
  CHECK(std::is_sorted(split.validation.begin(), split.validation.end()));
  CHECK(std::is_sorted(split.test.begin(), split.test.end()));
  const std::size_t tail = ds.partners.size() - split.head.size();
  CHECK(split.validation.size() ==
        static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(tail))));

  // deterministic in the seed
  const DatasetSplit again = split_head_tail(ds, 0.5, 0.25, 9);
  CHECK(again.head == split.head);
  CHECK(again.validation == split.validation);
  CHECK(again.test == split.test);

  CHECK_THROWS_AS(split_head_tail(ds, 0.0, 0.25, 9), ConfigError);
  CHECK_THROWS_AS(split_head_tail(ds, 1.1, 0.25, 9), ConfigError);
  CHECK_THROWS_AS(split_head_tail(ds, 0.5, 1.0, 9), ConfigError);

  const DatasetSplit all = split_head_tail(ds, 1.0, 0.25, 9);
  CHECK(all.head.size() == ds.partners.size());
  CHECK(all.validation.empty());
  CHECK(all.test.empty());
}

TEST_CASE("records_for filters by partner and day") {
  const Dataset ds = generate(tiny_config(), 13);
  const std::vector<std::int32_t> wanted{1, 3};
  const auto day0 = records_for(ds.records, wanted, 0);
  const auto any = records_for(ds.records, wanted, -1);
  CHECK(!day0.empty());
  CHECK(any.size() > day0.size());
  for (const auto& rec : day0) {
    CHECK((rec.partner == 1 || rec.partner == 3));
    CHECK(rec.day == 0);
  }
  std::size_t want_n = 0;
  for (const auto& rec : ds.records)
    if ((rec.partner == 1 || rec.partner == 3) && rec.day == 0) ++want_n;
  CHECK(day0.size() == want_n);
  CHECK(records_for(ds.records, {}, -1).empty());
}

TEST_CASE("fraction samples are nested and sized per partner") {
  const Dataset ds = generate(tiny_config(), 17);
  const auto day0 = records_for(ds.records, {0, 1, 2, 3, 4, 5, 6, 7}, 0);

  const auto f0 = sample_fraction(day0, 0.0, 99);
  CHECK(f0.empty());
  const auto f30 = sample_fraction(day0, 0.3, 99);
  const auto f70 = sample_fraction(day0, 0.7, 99);
  const auto f100 = sample_fraction(day0, 1.0, 99);
  CHECK(same_records(f100, day0));

  std::set<std::int64_t> ids70;
  for (const auto& rec : f70) ids70.insert(rec.id);
  for (const auto& rec : f30) CHECK(ids70.count(rec.id) == 1);

  std::map<std::int32_t, std::size_t> full_n, n30;
  for (const auto& rec : day0) ++full_n[rec.partner];
  for (const auto& rec : f30) ++n30[rec.partner];
  for (const auto& [partner, n] : full_n)
    CHECK(n30[partner] == static_cast<std::size_t>(
                              std::llround(0.3 * static_cast<double>(n))));

  for (std::size_t i = 1; i < f30.size(); ++i) CHECK(f30[i - 1].id < f30[i].id);

  // a different seed picks a different subset of the same size
  const auto other = sample_fraction(day0, 0.3, 100);
  CHECK(other.size() == f30.size());
  std::set<std::int64_t> ids30;
  for (const auto& rec : f30) ids30.insert(rec.id);
  bool differs = false;
  for (const auto& rec : other)
    if (!ids30.count(rec.id)) differs = true;
  CHECK(differs);

  CHECK_THROWS_AS(sample_fraction(day0, -0.1, 1), ConfigError);
  CHECK_THROWS_AS(sample_fraction(day0, 1.5, 1), ConfigError);
}

TEST_CASE("dataset file round-trip is byte-identical") {
  const Dataset ds = generate(tiny_config(), 23);
  const std::string p1 = temp_path("ds_a.txt");
  const std::string p2 = temp_path("ds_b.txt");
  write_dataset(p1, ds);
  const Dataset back = read_dataset(p1);
  CHECK(back.seed == ds.seed);
  CHECK(back.label_intercept == ds.label_intercept);
  CHECK(back.config.category_dim == ds.config.category_dim);
  CHECK(back.config.campaign_dim == ds.config.campaign_dim);
  CHECK(back.config.n_partners == ds.config.n_partners);
  CHECK(same_records(back.records, ds.records));
  write_dataset(p2, back);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("profiles and split files round-trip") {
  const Dataset ds = generate(tiny_config(), 29);
  const std::string pp = temp_path("prof.txt");
  write_profiles(pp, ds);
  Dataset shell;
  shell.config = ds.config;
  read_profiles(pp, shell);
  REQUIRE(shell.partners.size() == ds.partners.size());
  for (std::size_t i = 0; i < ds.partners.size(); ++i) {
    CHECK(shell.partners[i].id == ds.partners[i].id);
    CHECK(shell.partners[i].budget_weight == ds.partners[i].budget_weight);
    CHECK(shell.partners[i].categories == ds.partners[i].categories);
    CHECK(shell.partners[i].coeffs == ds.partners[i].coeffs);
  }
  const std::string p2 = temp_path("prof2.txt");
  write_profiles(p2, shell);
  CHECK(slurp(pp) == slurp(p2));

  const DatasetSplit split = split_head_tail(ds, 0.5, 0.25, 9);
  const std::string ps = temp_path("split.txt");
  write_split(ps, split);
  const DatasetSplit back = read_split(ps);
  CHECK(back.head == split.head);
  CHECK(back.validation == split.validation);
  CHECK(back.test == split.test);

  std::remove(pp.c_str());
  std::remove(p2.c_str());
  std::remove(ps.c_str());
}

TEST_CASE("readers report the offending line") {
  const std::string path = temp_path("bad.txt");

  write_text(path, "cda-dataset 2\n");
  CHECK_THROWS_WITH_AS(read_dataset(path),
                       doctest::Contains("not a cda-dataset"), ParseError);

  write_text(path,
             "cda-dataset 1\nseed 1\ndims 2 2\nmeta 1 1 0\nrecords 2\n"
             "0 0 0 0 0 - 1,2\n");
  // truncated: second record missing
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("unexpected end"),
                       ParseError);

  write_text(path,
             "cda-dataset 1\nseed 1\ndims 2 2\nmeta 1 1 0\nrecords 1\n"
             "0 0 0 0 5 - 1,2\n");
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains(":6:"), ParseError);

  write_text(path,
             "cda-dataset 1\nseed 1\ndims 2 2\nmeta 1 1 0\nrecords 1\n"
             "0 0 0 0 1 9 1,2\n");
  CHECK_THROWS_WITH_AS(read_dataset(path),
                       doctest::Contains("category out of range"), ParseError);

  write_text(path,
             "cda-dataset 1\nseed 1\ndims 2 2\nmeta 1 1 0\nrecords 1\n"
             "0 0 0 0 1 - 1,2,3\n");
  CHECK_THROWS_WITH_AS(read_dataset(path),
                       doctest::Contains("campaign slot count mismatch"),
                       ParseError);

  write_text(path,
             "cda-dataset 1\nseed 1\ndims 2 2\nmeta 1 1 0\nrecords 1\n"
             "0 0 0 0 1 - 1,x\n");
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("bad number"),
                       ParseError);

  write_text(path, "cda-split 1\nhead 2 0,1\nvalidation 0 -\ntest 1 2,3\n");
  CHECK_THROWS_WITH_AS(read_split(path), doctest::Contains("count mismatch"),
                       ParseError);

  CHECK_THROWS_WITH_AS(read_dataset(temp_path("missing_file.txt")),
                       doctest::Contains("cannot open"), ParseError);

  std::remove(path.c_str());
}
