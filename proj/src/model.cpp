#include "cda/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cda/errors.hpp"

namespace cda {

void FeatureSchema::validate() const {
  if (category_dim < 1 || campaign_dim < 1)
    throw ConfigError("schema: category_dim and campaign_dim must be >= 1");
}

std::uint64_t FeatureSchema::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(0x63646153u);  // schema salt
  mix(static_cast<std::uint64_t>(category_dim));
  mix(static_cast<std::uint64_t>(campaign_dim));
  return h;
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "nt") return ModelKind::kNt;
  if (name == "sda") return ModelKind::kSda;
  if (name == "iada") return ModelKind::kIada;
  if (name == "lada") return ModelKind::kLada;
  throw ConfigError("unknown model kind '" + name + "'");
}

std::string kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNt: return "nt";
    case ModelKind::kSda: return "sda";
    case ModelKind::kIada: return "iada";
    case ModelKind::kLada: return "lada";
  }
  throw ConfigError("bad model kind enum");
}

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
  if (latent_dim < 1) throw ConfigError("train: latent_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("train: dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 0 || fine_tune_epochs < 0)
    throw ConfigError("train: epoch counts must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("train: alpha must be in [0, 1]");
}

constexpr double kCampaignFeatureScale = 0.5;

Matrix build_views(const std::vector<ImpressionRecord>& records,
                   const FeatureSchema& schema, View view) {
  Matrix x(records.size(), static_cast<std::size_t>(schema.total_dim()));
  for (std::size_t r = 0; r < records.size(); ++r) {
    const ImpressionRecord& rec = records[r];
    double* row = x.row(r);
    for (std::int32_t c : rec.categories) {
      if (c < 0 || c >= schema.category_dim)
        throw DataError("record category slot out of schema range");
      row[c] = 1.0;
    }
    if (view == View::kSource) {
      if (rec.campaign.size() != static_cast<std::size_t>(schema.campaign_dim))
        throw DataError("record campaign slot count does not match schema");
      // Counts are heavy-tailed; log1p keeps zero slots at zero so the
      // target view stays the zeroed-slot projection of the source view.
      // The block is scaled down so fine-tuning a net whose count weights
      // never received base-phase gradients perturbs activations gently.
      for (int k = 0; k < schema.campaign_dim; ++k)
        row[schema.category_dim + k] =
            kCampaignFeatureScale * std::log1p(static_cast<double>(rec.campaign[k]));
    }
  }
  return x;
}

std::vector<double> labels_of(const std::vector<ImpressionRecord>& records) {
  std::vector<double> y(records.size());
  for (std::size_t r = 0; r < records.size(); ++r)
    y[r] = static_cast<double>(records[r].label);
  return y;
}

ModelBundle build_model(ModelKind kind, const FeatureSchema& schema,
                        const TrainConfig& config, std::uint64_t seed) {
  schema.validate();
  config.validate();
  ModelBundle bundle;
  bundle.kind = kind;
  bundle.schema = schema;
  bundle.config = config;
  if (kind == ModelKind::kNt) bundle.config.alpha = 1.0;  // no transfer term

  const auto total = static_cast<std::size_t>(schema.total_dim());
  const auto hidden = static_cast<std::size_t>(config.hidden_dim);
  const auto latent = static_cast<std::size_t>(config.latent_dim);
  const std::size_t g_out = kind == ModelKind::kIada ? total : latent;

  bundle.g = init_dense_net({total, hidden, hidden, g_out},
                            Activation::kIdentity, config.dropout,
                            mix_seed(seed, "init/g"));
  bundle.f = init_dense_net({g_out, hidden, hidden, 1}, Activation::kLogistic,
                            config.dropout, mix_seed(seed, "init/f"));
  const AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  bundle.g_state = init_adam(bundle.g, adam);
  bundle.f_state = init_adam(bundle.f, adam);
  if (kind == ModelKind::kLada) {
    bundle.he = init_dense_net({total, latent, 1}, Activation::kLogistic,
                               config.dropout, mix_seed(seed, "init/he"));
    bundle.he_state = init_adam(bundle.he, adam);
  }
  return bundle;
}

namespace {

void scale_matrix(Matrix& m, double a) {
  for (double& v : m.v) v *= a;
}

// d_base += scale * d_extra
void add_scaled(Matrix& d_base, const Matrix& d_extra, double scale) {
  require_same_shape(d_base, d_extra, "gradient accumulation");
  for (std::size_t i = 0; i < d_base.size(); ++i)
    d_base.v[i] += scale * d_extra.v[i];
}

StepGrads bce_only_grads(const ModelBundle& bundle, const Matrix& x,
                         const std::vector<double>& labels, Mode mode,
                         Rng* rng) {
  StepGrads out;
  const ForwardCache g_cache = forward(bundle.g, x, mode, rng);
  const ForwardCache f_cache = forward(bundle.f, g_cache.output, mode, rng);
  const LossGrad lg = bce_loss(f_cache.output, labels);
  out.loss = lg.loss;
  out.f = backward(bundle.f, f_cache, lg.grad);
  out.g = backward(bundle.g, g_cache, out.f.input);
  return out;
}

}  // namespace

StepGrads compute_joint_grads(const ModelBundle& bundle, const Matrix& x_target,
                              const Matrix& x_source,
                              const std::vector<double>& labels, Mode mode,
                              Rng* rng) {
  const double alpha = bundle.config.alpha;
  const bool transfer = bundle.kind != ModelKind::kNt && alpha < 1.0;

  if (bundle.kind == ModelKind::kSda) {
    StepGrads out;
    const ForwardCache gt = forward(bundle.g, x_target, mode, rng);
    const ForwardCache gs = forward(bundle.g, x_source, mode, rng);
    const ForwardCache ft = forward(bundle.f, gt.output, mode, rng);
    const ForwardCache fs = forward(bundle.f, gs.output, mode, rng);
    LossGrad lg_t = bce_loss(ft.output, labels);
    LossGrad lg_s = bce_loss(fs.output, labels);
    out.loss = alpha * (lg_t.loss + lg_s.loss);
    scale_matrix(lg_t.grad, alpha);
    scale_matrix(lg_s.grad, alpha);
    out.f = backward(bundle.f, ft, lg_t.grad);
    const Gradients f_src = backward(bundle.f, fs, lg_s.grad);
    Matrix d_gt = out.f.input;
    Matrix d_gs = f_src.input;
    accumulate_gradients(out.f, f_src, 1.0);
    if (transfer) {
      const LossGrad mse = mse_loss(gt.output, gs.output);
      out.loss += (1.0 - alpha) * mse.loss;
      add_scaled(d_gt, mse.grad, 1.0 - alpha);
      add_scaled(d_gs, mse.grad, -(1.0 - alpha));
    }
    out.g = backward(bundle.g, gt, d_gt);
    accumulate_gradients(out.g, backward(bundle.g, gs, d_gs), 1.0);
    return out;
  }

  if (!transfer) {
    // identical arithmetic to the NT path, whatever the kind
    StepGrads out = bce_only_grads(bundle, x_target, labels, mode, rng);
    if (bundle.kind == ModelKind::kLada) {
      out.has_he = true;
      out.he = zero_gradients(bundle.he, x_target.rows);
    }
    return out;
  }

  StepGrads out;
  const ForwardCache g_cache = forward(bundle.g, x_target, mode, rng);
  const ForwardCache f_cache = forward(bundle.f, g_cache.output, mode, rng);
  LossGrad lg = bce_loss(f_cache.output, labels);
  const Matrix anchor = bundle.kind == ModelKind::kIada
                            ? x_source
                            : hidden_activations(bundle.he, x_source);
  const LossGrad mse = mse_loss(g_cache.output, anchor);
  out.loss = alpha * lg.loss + (1.0 - alpha) * mse.loss;
  scale_matrix(lg.grad, alpha);
  out.f = backward(bundle.f, f_cache, lg.grad);
  Matrix d_g = out.f.input;
  add_scaled(d_g, mse.grad, 1.0 - alpha);
  out.g = backward(bundle.g, g_cache, d_g);
  if (bundle.kind == ModelKind::kLada) {
    out.has_he = true;
    out.he = zero_gradients(bundle.he, x_target.rows);
  }
  return out;
}

StepGrads compute_finetune_grads(const ModelBundle& bundle,
                                 const Matrix& x_source,
                                 const std::vector<double>& labels, Mode mode,
                                 Rng* rng) {
  StepGrads out = bce_only_grads(bundle, x_source, labels, mode, rng);
  if (bundle.kind == ModelKind::kLada) {
    out.has_he = true;
    out.he = zero_gradients(bundle.he, x_source.rows);
  }
  return out;
}

namespace {

Matrix rows_subset(const Matrix& x, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end) {
  Matrix out(end - begin, x.cols);
  for (std::size_t r = begin; r < end; ++r)
    std::copy(x.row(order[r]), x.row(order[r]) + x.cols, out.row(r - begin));
  return out;
}

std::vector<double> labels_subset(const std::vector<double>& y,
                                  const std::vector<std::size_t>& order,
                                  std::size_t begin, std::size_t end) {
  std::vector<double> out(end - begin);
  for (std::size_t r = begin; r < end; ++r) out[r - begin] = y[order[r]];
  return out;
}

void train_he(ModelBundle& bundle, const Matrix& x_source,
              const std::vector<double>& labels, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "step1"));
  const auto n = x_source.rows;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(bundle.config.batch_size);
  for (int epoch = 0; epoch < bundle.config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < n; at += batch) {
      const std::size_t end = std::min(n, at + batch);
      const Matrix xb = rows_subset(x_source, order, at, end);
      const std::vector<double> yb = labels_subset(labels, order, at, end);
      const ForwardCache cache = forward(bundle.he, xb, Mode::kTrain, &rng);
      const LossGrad lg = bce_loss(cache.output, yb);
      const Gradients grads = backward(bundle.he, cache, lg.grad);
      adam_step(bundle.he, grads, bundle.he_state);
    }
  }
}

}  // namespace

ModelBundle train_base(ModelKind kind, const FeatureSchema& schema,
                       const TrainConfig& config,
                       const std::vector<ImpressionRecord>& records,
                       std::uint64_t seed) {
  ModelBundle bundle = build_model(kind, schema, config, seed);
  if (records.empty()) return bundle;

  const Matrix x_target = build_views(records, schema, View::kTarget);
  const std::vector<double> y = labels_of(records);
  const bool needs_source =
      kind == ModelKind::kSda || kind == ModelKind::kLada ||
      (kind == ModelKind::kIada && bundle.config.alpha < 1.0);
  Matrix x_source;
  if (needs_source) x_source = build_views(records, schema, View::kSource);

  if (kind == ModelKind::kLada) train_he(bundle, x_source, y, seed);

  Rng rng(mix_seed(seed, "train"));
  const auto n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(bundle.config.batch_size);
  const bool batch_source =
      kind == ModelKind::kSda ||
      (kind != ModelKind::kNt && bundle.config.alpha < 1.0);
  for (int epoch = 0; epoch < bundle.config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < n; at += batch) {
      const std::size_t end = std::min(n, at + batch);
      const Matrix xt = rows_subset(x_target, order, at, end);
      const Matrix xs =
          batch_source ? rows_subset(x_source, order, at, end) : Matrix();
      const std::vector<double> yb = labels_subset(y, order, at, end);
      const StepGrads grads =
          compute_joint_grads(bundle, xt, xs, yb, Mode::kTrain, &rng);
      adam_step(bundle.g, grads.g, bundle.g_state);
      adam_step(bundle.f, grads.f, bundle.f_state);
    }
  }
  return bundle;
}

void fine_tune(ModelBundle& bundle,
               const std::vector<ImpressionRecord>& records,
               std::uint64_t seed) {
  if (records.empty()) return;
  const Matrix x_source = build_views(records, bundle.schema, View::kSource);
  const std::vector<double> y = labels_of(records);

  Rng rng(mix_seed(seed, "finetune"));
  const auto n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(bundle.config.batch_size);
  for (int epoch = 0; epoch < bundle.config.fine_tune_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < n; at += batch) {
      const std::size_t end = std::min(n, at + batch);
      const Matrix xb = rows_subset(x_source, order, at, end);
      const std::vector<double> yb = labels_subset(y, order, at, end);
      const StepGrads grads =
          compute_finetune_grads(bundle, xb, yb, Mode::kTrain, &rng);
      adam_step(bundle.g, grads.g, bundle.g_state);
      adam_step(bundle.f, grads.f, bundle.f_state);
    }
  }
}

std::vector<double> predict(const ModelBundle& bundle,
                            const std::vector<ImpressionRecord>& records,
                            View view) {
  std::vector<double> out;
  out.reserve(records.size());
  const std::size_t chunk = 4096;
  for (std::size_t at = 0; at < records.size(); at += chunk) {
    const std::size_t end = std::min(records.size(), at + chunk);
    const std::vector<ImpressionRecord> part(records.begin() + at,
                                             records.begin() + end);
    const Matrix x = build_views(part, bundle.schema, view);
    const ForwardCache g_cache = forward(bundle.g, x, Mode::kEval);
    const ForwardCache f_cache = forward(bundle.f, g_cache.output, Mode::kEval);
    for (std::size_t r = 0; r < f_cache.output.rows; ++r)
      out.push_back(f_cache.output.at(r, 0));
  }
  return out;
}

}  // namespace cda
