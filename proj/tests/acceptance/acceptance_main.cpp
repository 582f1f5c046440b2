// End-to-end acceptance checks. Each check prints exactly one PASS/FAIL line;
// the exit code is the number of failures. The heavyweight checks (6 and 7)
// share a single benchmark-scale journey run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cda/checkpoint.hpp"
#include "cda/experiment.hpp"

namespace fs = std::filesystem;
using namespace cda;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strfmt(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

struct CheckResult {
  bool ok = true;
  std::string detail;
};

// --- parameter plumbing -------------------------------------------------------

// Parameter arrays in w0, b0, w1, b1, ... order, mirroring Gradients::layers.
std::vector<std::vector<double>*> net_params(DenseNet& net) {
  std::vector<std::vector<double>*> out;
  for (DenseLayer& layer : net.layers) {
    out.push_back(&layer.w.v);
    out.push_back(&layer.b);
  }
  return out;
}

const double* grad_array(const Gradients& grads, std::size_t idx) {
  const LayerGrads& lg = grads.layers[idx / 2];
  return idx % 2 == 0 ? lg.dw.v.data() : lg.db.data();
}

bool doubles_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool nets_equal(const DenseNet& a, const DenseNet& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    if (!doubles_equal(a.layers[l].w.v, b.layers[l].w.v) ||
        !doubles_equal(a.layers[l].b, b.layers[l].b))
      return false;
  return true;
}

bool adam_equal(const AdamState& a, const AdamState& b) {
  if (a.step != b.step || a.m.size() != b.m.size() || a.v.size() != b.v.size())
    return false;
  for (std::size_t i = 0; i < a.m.size(); ++i)
    if (!doubles_equal(a.m[i], b.m[i]) || !doubles_equal(a.v[i], b.v[i]))
      return false;
  return true;
}

bool bundles_equal(const ModelBundle& a, const ModelBundle& b) {
  return nets_equal(a.g, b.g) && nets_equal(a.f, b.f) &&
         nets_equal(a.he, b.he) && adam_equal(a.g_state, b.g_state) &&
         adam_equal(a.f_state, b.f_state) && adam_equal(a.he_state, b.he_state);
}

// --- 1: analytic gradients vs central differences ------------------------------

CheckResult check_gradients() {
  const auto t0 = Clock::now();
  const FeatureSchema schema{2, 2};
  const ModelKind kinds[] = {ModelKind::kNt, ModelKind::kSda, ModelKind::kIada,
                             ModelKind::kLada};
  const double h = 1e-5;
  const double tol = 1e-4;
  std::size_t instances = 0;
  std::size_t partials = 0;
  double max_rel = 0.0;

  // One instance: random tiny bundle and batch, exercising either the joint
  // loss or the fine-tune loss in eval mode (no dropout, so the loss is a
  // deterministic function of the parameters).
  const auto run_instance = [&](ModelKind kind, std::uint64_t salt,
                                bool finetune) -> std::optional<std::string> {
    Rng rng(mix_seed(salt, "acceptance/grad",
                     static_cast<std::uint64_t>(kind) * 2 + finetune));
    TrainConfig tc;
    tc.hidden_dim = 5;
    tc.latent_dim = 4;
    tc.alpha = kind == ModelKind::kNt ? 1.0 : rng.uniform(0.15, 0.85);
    ModelBundle bundle = build_model(kind, schema, tc, 40 + salt);
    // Bias jitter moves every pre-activation off the rectifier kink, where
    // central differences would straddle a nondifferentiable point.
    for (DenseNet* net : {&bundle.g, &bundle.f, &bundle.he})
      for (DenseLayer& layer : net->layers)
        for (double& b : layer.b) b += 0.2 * rng.normal();

    const std::size_t batch = 1 + rng.bounded(4);
    Matrix x_source(batch, static_cast<std::size_t>(schema.total_dim()));
    Matrix x_target(batch, static_cast<std::size_t>(schema.total_dim()));
    std::vector<double> labels(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      for (int c = 0; c < schema.category_dim; ++c)
        x_source.at(r, c) = static_cast<double>(rng.bounded(2));
      for (int c = schema.category_dim; c < schema.total_dim(); ++c)
        x_source.at(r, c) = rng.uniform(0.0, 1.2);
      for (int c = 0; c < schema.category_dim; ++c)
        x_target.at(r, c) = x_source.at(r, c);
      labels[r] = static_cast<double>(rng.bounded(2));
    }
    const Matrix empty;
    const Matrix& xs = kind == ModelKind::kNt ? empty : x_source;

    const auto grads_at = [&]() {
      return finetune ? compute_finetune_grads(bundle, x_source, labels,
                                               Mode::kEval, nullptr)
                      : compute_joint_grads(bundle, x_target, xs, labels,
                                            Mode::kEval, nullptr);
    };
    const StepGrads analytic = grads_at();

    for (int which = 0; which < 2; ++which) {
      DenseNet& net = which == 0 ? bundle.g : bundle.f;
      const Gradients& grads = which == 0 ? analytic.g : analytic.f;
      const auto arrays = net_params(net);
      for (std::size_t ai = 0; ai < arrays.size(); ++ai) {
        for (std::size_t j = 0; j < arrays[ai]->size(); ++j) {
          double& theta = (*arrays[ai])[j];
          const double keep = theta;
          theta = keep + h;
          const double loss_hi = grads_at().loss;
          theta = keep - h;
          const double loss_lo = grads_at().loss;
          theta = keep;
          const double fd = (loss_hi - loss_lo) / (2.0 * h);
          const double an = grad_array(grads, ai)[j];
          const double rel = std::fabs(an - fd) /
                             std::max({std::fabs(an), std::fabs(fd), 1e-2});
          max_rel = std::max(max_rel, rel);
          ++partials;
          if (rel > tol)
            return strfmt("%s %s grad mismatch: analytic %.9g vs fd %.9g",
                          kind_name(kind).c_str(), which == 0 ? "g" : "f", an,
                          fd);
        }
      }
    }
    if (kind == ModelKind::kLada && !finetune) {
      if (!analytic.has_he) return std::string("lada grads lack the he block");
      for (const LayerGrads& lg : analytic.he.layers) {
        for (const double x : lg.dw.v)
          if (x != 0.0) return std::string("frozen he weight grad nonzero");
        for (const double x : lg.db)
          if (x != 0.0) return std::string("frozen he bias grad nonzero");
      }
    }
    ++instances;
    return std::nullopt;
  };

  for (std::uint64_t salt = 0; salt < 6; ++salt)
    for (ModelKind kind : kinds)
      if (const auto err = run_instance(kind, salt, false)) return {false, *err};
  for (ModelKind kind : kinds)
    if (const auto err = run_instance(kind, 100, true)) return {false, *err};

  const double dt = seconds_since(t0);
  if (dt >= 10.0) return {false, strfmt("took %.1fs, budget 10s", dt)};
  return {true, strfmt("%zu instances, %zu partials, max rel err %.2e, %.2fs",
                       instances, partials, max_rel, dt)};
}

// --- 2: ranking metrics vs brute-force oracles ----------------------------------

CheckResult check_metrics() {
  const auto t0 = Clock::now();
  std::size_t compared = 0;
  double worst_auc = 0.0, worst_ap = 0.0, worst_ndcg = 0.0, worst_roc = 0.0;

  for (int i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(31, "acceptance/metrics", static_cast<std::uint64_t>(i)));
    const std::size_t n = 1 + rng.bounded(200);
    std::vector<std::int64_t> ids(n);
    for (std::size_t j = 0; j < n; ++j) ids[j] = static_cast<std::int64_t>(j);
    rng.shuffle(ids);

    const bool gridded = rng.bounded(2) == 0;  // force heavy score ties
    const bool constant = i % 97 == 0;
    const double positive_rate = rng.uniform(0.05, 0.95);
    std::vector<ScoredRecord> recs(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double score = constant  ? 0.5
                           : gridded ? static_cast<double>(rng.bounded(8)) / 8.0
                                     : rng.uniform();
      recs[j] = {ids[j], 7, score, rng.uniform() < positive_rate ? 1 : 0};
    }

    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (recs[a].score != recs[b].score) return recs[a].score > recs[b].score;
      return recs[a].id < recs[b].id;
    });
    std::size_t n_pos = 0;
    for (const ScoredRecord& r : recs) n_pos += static_cast<std::size_t>(r.label);
    const std::size_t n_neg = n - n_pos;

    const std::optional<double> auc = auc_roc(recs);
    if (n_pos == 0 || n_neg == 0) {
      if (auc) return {false, "auc defined on a single-class set"};
    } else {
      if (!auc) return {false, "auc missing on a two-class set"};
      double wins = 0.0;
      for (const ScoredRecord& p : recs) {
        if (!p.label) continue;
        for (const ScoredRecord& q : recs) {
          if (q.label) continue;
          wins += p.score > q.score ? 1.0 : p.score == q.score ? 0.5 : 0.0;
        }
      }
      const double oracle =
          wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
      worst_auc = std::max(worst_auc, std::fabs(*auc - oracle));
      if (worst_auc > 1e-12)
        return {false, strfmt("auc %.17g vs paired-count %.17g", *auc, oracle)};

      const auto pts = roc_points(recs);
      if (!pts) return {false, "roc points missing on a two-class set"};
      double area = 0.0;
      for (std::size_t j = 1; j < pts->size(); ++j)
        area += ((*pts)[j].fpr - (*pts)[j - 1].fpr) *
                ((*pts)[j].tpr + (*pts)[j - 1].tpr) * 0.5;
      worst_roc = std::max(worst_roc, std::fabs(area - *auc));
      if (worst_roc > 1e-9)
        return {false, strfmt("roc trapezoid %.17g vs auc %.17g", area, *auc)};
    }

    const std::optional<double> ap = average_precision(recs);
    if (n_pos == 0) {
      if (ap) return {false, "ap defined without positives"};
    } else {
      if (!ap) return {false, "ap missing with positives present"};
      double hits = 0.0, acc = 0.0;
      for (std::size_t rank = 0; rank < n; ++rank)
        if (recs[order[rank]].label) {
          hits += 1.0;
          acc += hits / static_cast<double>(rank + 1);
        }
      const double oracle = acc / static_cast<double>(n_pos);
      worst_ap = std::max(worst_ap, std::fabs(*ap - oracle));
      if (worst_ap > 1e-12)
        return {false, strfmt("ap %.17g vs oracle %.17g", *ap, oracle)};
    }

    const std::size_t k = rng.bounded(n + 4);  // 0 means "all", may exceed n
    const std::size_t kk = k == 0 ? n : std::min(k, n);
    double dcg = 0.0, hits_k = 0.0;
    for (std::size_t rank = 0; rank < kk; ++rank) {
      dcg += recs[order[rank]].label /
             std::log2(static_cast<double>(rank + 2));
      hits_k += recs[order[rank]].label;
    }
    double idcg = 0.0;
    for (std::size_t rank = 0; rank < std::min(kk, n_pos); ++rank)
      idcg += 1.0 / std::log2(static_cast<double>(rank + 2));
    const double ndcg_oracle = n_pos == 0 ? 0.0 : dcg / idcg;
    const double ndcg = ndcg_at_k(recs, k);
    worst_ndcg = std::max(worst_ndcg, std::fabs(ndcg - ndcg_oracle));
    if (worst_ndcg > 1e-9)
      return {false, strfmt("ndcg@%zu %.17g vs oracle %.17g", k, ndcg,
                            ndcg_oracle)};

    const double p_oracle = hits_k / static_cast<double>(kk);
    const double p_at_k = precision_at_k(recs, k);
    if (std::fabs(p_at_k - p_oracle) > 1e-12)
      return {false, strfmt("p@%zu %.17g vs oracle %.17g", k, p_at_k, p_oracle)};
    ++compared;
  }

  const double dt = seconds_since(t0);
  if (dt >= 30.0) return {false, strfmt("took %.1fs, budget 30s", dt)};
  return {true,
          strfmt("1000 sets, worst |err| auc %.1e ap %.1e ndcg %.1e roc %.1e, "
                 "%.2fs",
                 worst_auc, worst_ap, worst_ndcg, worst_roc, dt)};
}

// --- shared small dataset for checks 3 and 4 ------------------------------------

GeneratorConfig small_generator() {
  GeneratorConfig gc;
  gc.n_partners = 40;
  gc.n_users = 500;
  gc.n_train_impressions = 2000;
  gc.n_eval_impressions = 300;
  return gc;
}

// --- 3: alpha = 1 reduces iada/lada training to nt ------------------------------

CheckResult check_alpha_one() {
  const auto t0 = Clock::now();
  const GeneratorConfig gc = small_generator();
  const Dataset ds = generate(gc, 7);
  const DatasetSplit split = split_head_tail(ds, 0.8, 0.2, 7);
  std::vector<ImpressionRecord> head = records_for(ds.records, split.head, 0);
  if (head.size() < 1000)
    return {false, strfmt("head set too small (%zu records)", head.size())};
  head.resize(1000);

  const FeatureSchema schema{gc.category_dim, gc.campaign_dim};
  TrainConfig tc;
  tc.hidden_dim = 16;
  tc.latent_dim = schema.total_dim();  // iada's g then matches nt's shape
  tc.alpha = 1.0;

  for (int epochs = 1; epochs <= 3; ++epochs) {
    tc.epochs = epochs;
    const ModelBundle nt = train_base(ModelKind::kNt, schema, tc, head, 11);
    for (ModelKind kind : {ModelKind::kIada, ModelKind::kLada}) {
      const ModelBundle other = train_base(kind, schema, tc, head, 11);
      if (!nets_equal(nt.g, other.g) || !nets_equal(nt.f, other.f) ||
          !adam_equal(nt.g_state, other.g_state) ||
          !adam_equal(nt.f_state, other.f_state))
        return {false, strfmt("%s diverges from nt at epoch %d",
                              kind_name(kind).c_str(), epochs)};
    }
  }
  return {true, strfmt("g, f and optimizer state bit-identical over epochs "
                       "1-3 on 1000 records, %.2fs",
                       seconds_since(t0))};
}

// --- 4: checkpoint round-trip and fraction-0 fine-tune --------------------------

CheckResult check_checkpoint_resume() {
  const auto t0 = Clock::now();
  const GeneratorConfig gc = small_generator();
  const Dataset ds = generate(gc, 9);
  const DatasetSplit split = split_head_tail(ds, 0.8, 0.2, 9);
  const auto head = records_for(ds.records, split.head, 0);
  const auto tune = records_for(ds.records, split.test, 0);
  if (tune.empty()) return {false, "no tail-test records to fine-tune on"};

  const FeatureSchema schema{gc.category_dim, gc.campaign_dim};
  TrainConfig tc;
  tc.hidden_dim = 16;
  tc.latent_dim = 12;
  tc.epochs = 2;
  const fs::path ckpt = fs::temp_directory_path() / "cda_acceptance.ckpt";

  for (ModelKind kind : {ModelKind::kNt, ModelKind::kLada}) {
    tc.alpha = kind == ModelKind::kNt ? 1.0 : 0.4;
    const ModelBundle base = train_base(kind, schema, tc, head, 9);

    ModelBundle direct = base;
    fine_tune(direct, tune, 9);

    save_checkpoint(ckpt.string(), base, CheckpointMeta{Phase::kBase, 0.0});
    ModelBundle resumed = load_checkpoint(ckpt.string());
    fine_tune(resumed, tune, 9);
    if (!bundles_equal(direct, resumed))
      return {false, strfmt("%s save/load fine-tune differs from the "
                            "uninterrupted run",
                            kind_name(kind).c_str())};

    ModelBundle frozen = base;
    fine_tune(frozen, sample_fraction(tune, 0.0, 9), 9);
    if (!bundles_equal(frozen, base))
      return {false, strfmt("%s fraction-0 fine-tune moved parameters",
                            kind_name(kind).c_str())};
  }
  fs::remove(ckpt);
  return {true, strfmt("nt and lada resume bit-exact, fraction 0 is a no-op, "
                       "%.2fs",
                       seconds_since(t0))};
}

// --- 5: generated volume skew and positive rate ---------------------------------

CheckResult check_generator_targets() {
  const auto t0 = Clock::now();
  const GeneratorConfig gc;  // benchmark defaults
  std::size_t worst_prefix = 0;
  double rate_lo = 1.0, rate_hi = 0.0;

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset ds = generate(gc, seed);
    std::vector<std::size_t> per_partner(gc.n_partners, 0);
    std::size_t positives = 0;
    for (const ImpressionRecord& rec : ds.records) {
      ++per_partner[static_cast<std::size_t>(rec.partner)];
      positives += static_cast<std::size_t>(rec.label);
    }
    std::sort(per_partner.begin(), per_partner.end(), std::greater<>());
    const std::size_t total = ds.records.size();
    std::size_t covered = 0, prefix = 0;
    while (covered * 2 < total) covered += per_partner[prefix++];
    worst_prefix = std::max(worst_prefix, prefix);
    if (prefix > 51)
      return {false, strfmt("seed %llu: %zu partners to cover half the "
                            "impressions, cap 51",
                            static_cast<unsigned long long>(seed), prefix)};

    const double rate =
        static_cast<double>(positives) / static_cast<double>(total);
    rate_lo = std::min(rate_lo, rate);
    rate_hi = std::max(rate_hi, rate);
    if (rate < 0.04 || rate > 0.06)
      return {false, strfmt("seed %llu: positive rate %.4f outside "
                            "[0.04, 0.06]",
                            static_cast<unsigned long long>(seed), rate)};
  }
  return {true, strfmt("10 seeds: 50%% volume within %zu partners, positive "
                       "rate %.4f..%.4f, %.1fs",
                       worst_prefix, rate_lo, rate_hi, seconds_since(t0))};
}

// --- 6 and 7: one benchmark journey, shared -------------------------------------

struct JourneyNumbers {
  bool ran = false;
  std::string error;
  double minutes = 0.0;
  std::vector<std::uint64_t> seeds;
  // model -> metric -> fraction -> seed -> macro value
  std::map<std::string,
           std::map<std::string, std::map<double, std::map<std::uint64_t, double>>>>
      macro;

  double mean(const std::string& model, const std::string& metric,
              double fraction) const {
    const auto& per_seed = macro.at(model).at(metric).at(fraction);
    double sum = 0.0;
    for (const auto& [seed, value] : per_seed) sum += value;
    return sum / static_cast<double>(per_seed.size());
  }
};

JourneyNumbers run_benchmark_journey() {
  JourneyNumbers out;
  const ExperimentConfig config = parse_experiment_config(
      R"({"metrics": ["auc", "ap"], "fractions": [0.0, 1.0]})", "acceptance");
  out.seeds = config.seeds;

  const fs::path dir = fs::temp_directory_path() / "cda_acceptance_journey";
  fs::remove_all(dir);
  const auto t0 = Clock::now();
  const JourneySummary summary = run_journey(config, dir.string());
  out.minutes = seconds_since(t0) / 60.0;
  if (summary.cells_failed != 0) {
    out.error = strfmt("%zu journey cells failed", summary.cells_failed);
    return out;
  }

  std::ifstream in(summary.results_path);
  if (!in) {
    out.error = "missing results table";
    return out;
  }
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 8) {
      out.error = "malformed results row: " + line;
      return out;
    }
    if (cols[2] != "macro") continue;
    out.macro[cols[0]][cols[3]][std::stod(cols[1])]
             [std::stoull(cols[7])] = std::stod(cols[5]);
  }
  for (const char* model : {"nt", "sda", "iada", "lada"})
    for (const char* metric : {"auc", "ap"})
      for (double fraction : {0.0, 1.0})
        if (out.macro[model][metric][fraction].size() != out.seeds.size()) {
          out.error = strfmt("%s %s fraction %g: expected %zu seeds", model,
                             metric, fraction, out.seeds.size());
          return out;
        }
  out.ran = true;
  return out;
}

JourneyNumbers g_journey;

CheckResult check_cold_start_transfer() {
  g_journey = run_benchmark_journey();
  if (!g_journey.ran) return {false, g_journey.error};
  if (g_journey.minutes >= 15.0)
    return {false, strfmt("journey took %.1f min, budget 15", g_journey.minutes)};

  const double nt_auc = g_journey.mean("nt", "auc", 0.0);
  const double nt_ap = g_journey.mean("nt", "ap", 0.0);
  for (const char* model : {"iada", "lada"}) {
    const double auc = g_journey.mean(model, "auc", 0.0);
    const double ap = g_journey.mean(model, "ap", 0.0);
    if (auc <= nt_auc)
      return {false, strfmt("%s cold auc %.4f does not beat nt %.4f", model,
                            auc, nt_auc)};
    if (ap <= nt_ap)
      return {false, strfmt("%s cold ap %.4f does not beat nt %.4f", model, ap,
                            nt_ap)};
  }

  std::size_t wins = 0;
  for (const std::uint64_t seed : g_journey.seeds)
    if (g_journey.macro["lada"]["ap"][0.0][seed] >=
        g_journey.macro["nt"]["ap"][0.0][seed])
      ++wins;
  if (wins < 8)
    return {false, strfmt("lada ap beats nt on %zu/%zu seeds, need 8", wins,
                          g_journey.seeds.size())};

  return {true,
          strfmt("cold auc nt %.4f iada %.4f lada %.4f; ap nt %.4f iada %.4f "
                 "lada %.4f; lada ap wins %zu/%zu; %.1f min",
                 nt_auc, g_journey.mean("iada", "auc", 0.0),
                 g_journey.mean("lada", "auc", 0.0), nt_ap,
                 g_journey.mean("iada", "ap", 0.0),
                 g_journey.mean("lada", "ap", 0.0), wins,
                 g_journey.seeds.size(), g_journey.minutes)};
}

CheckResult check_finetune_no_harm() {
  if (!g_journey.ran) return {false, "benchmark journey unavailable"};
  std::string detail;
  for (const char* model : {"nt", "sda", "iada", "lada"}) {
    const double cold = g_journey.mean(model, "auc", 0.0);
    const double tuned = g_journey.mean(model, "auc", 1.0);
    if (tuned < cold)
      return {false, strfmt("%s seed-average auc drops %.4f -> %.4f under "
                            "full-volume fine-tuning",
                            model, cold, tuned)};
    detail += strfmt("%s%s %.3f->%.3f", detail.empty() ? "" : " ", model, cold,
                     tuned);
  }
  return {true, detail};
}

// --- 8: journey determinism ------------------------------------------------------

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

CheckResult check_journey_determinism() {
  const auto t0 = Clock::now();
  const ExperimentConfig config = parse_experiment_config(R"({
    "generator": {"n_partners": 50, "n_users": 500,
                  "n_train_impressions": 3000, "n_eval_impressions": 1500},
    "train": {"hidden_dim": 12, "latent_dim": 10,
              "epochs": 2, "fine_tune_epochs": 1},
    "metrics": ["auc", "ap"], "fractions": [0.0, 0.5, 1.0], "seeds": [3, 4]
  })",
                                                          "acceptance");
  const fs::path base = fs::temp_directory_path();
  std::string first_results, first_alphas;
  for (const char* name : {"cda_acceptance_rep_a", "cda_acceptance_rep_b"}) {
    const fs::path dir = base / name;
    fs::remove_all(dir);
    const JourneySummary summary = run_journey(config, dir.string());
    if (summary.cells_failed != 0)
      return {false, strfmt("%zu cells failed", summary.cells_failed)};
    const std::string results = read_bytes(dir / "results.csv");
    const std::string alphas = read_bytes(dir / "alphas.csv");
    if (first_results.empty()) {
      first_results = results;
      first_alphas = alphas;
    } else if (results != first_results) {
      return {false, "results.csv differs between identical runs"};
    } else if (alphas != first_alphas) {
      return {false, "alphas.csv differs between identical runs"};
    }
  }
  return {true, strfmt("two runs, results.csv %zu bytes byte-identical, %.1fs",
                       first_results.size(), seconds_since(t0))};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    CheckResult (*fn)();
  };
  const Entry checks[] = {
      {"analytic gradients match central differences for every loss",
       check_gradients},
      {"ranking metrics match brute-force oracles on random sets",
       check_metrics},
      {"alpha 1 reduces iada and lada base training to nt bit for bit",
       check_alpha_one},
      {"checkpoint round-trip resumes fine-tuning bit for bit",
       check_checkpoint_resume},
      {"generated volume skew and positive rate hit their targets",
       check_generator_targets},
      {"cold-start transfer beats nt on macro auc and ap over 10 seeds",
       check_cold_start_transfer},
      {"full-volume fine-tuning never hurts seed-average macro auc",
       check_finetune_no_harm},
      {"repeated journeys produce byte-identical results tables",
       check_journey_determinism},
  };

  int failures = 0;
  int index = 0;
  for (const Entry& entry : checks) {
    ++index;
    CheckResult result;
    try {
      result = entry.fn();
    } catch (const std::exception& e) {
      result = {false, strfmt("exception: %s", e.what())};
    }
    if (!result.ok) ++failures;
    std::printf("%s: %d %s (%s)\n", result.ok ? "PASS" : "FAIL", index,
                entry.name, result.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
