#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cda/dataset.hpp"
#include "cda/nn.hpp"

namespace cda {

// Feature layout shared by every model: category slots first, campaign slots
// after. The target view is the source view with campaign slots zeroed.
struct FeatureSchema {
  int category_dim = 0;
  int campaign_dim = 0;

  int total_dim() const { return category_dim + campaign_dim; }
  std::uint64_t fingerprint() const;
  void validate() const;  // throws ConfigError
};

enum class ModelKind { kNt, kSda, kIada, kLada };

ModelKind kind_from_name(const std::string& name);  // throws ConfigError
std::string kind_name(ModelKind kind);

struct TrainConfig {
  int hidden_dim = 64;
  int latent_dim = 64;
  double dropout = 0.5;
  double learning_rate = 0.01;
  int batch_size = 256;
  int epochs = 5;
  int fine_tune_epochs = 2;
  double alpha = 1.0;  // weight on the classification term of the joint loss

  void validate() const;  // throws ConfigError
};

enum class View { kSource, kTarget };

Matrix build_views(const std::vector<ImpressionRecord>& records,
                   const FeatureSchema& schema, View view);
std::vector<double> labels_of(const std::vector<ImpressionRecord>& records);

// Encoder g, predictor f, and (LADA only) the frozen step-1 classifier he.
// g maps the target view to a latent code, except IADA where it imputes the
// full source vector. he's hidden activations are the anchor h(x).
struct ModelBundle {
  ModelKind kind = ModelKind::kNt;
  FeatureSchema schema;
  TrainConfig config;
  DenseNet g;
  DenseNet f;
  DenseNet he;  // empty unless kLada
  AdamState g_state;
  AdamState f_state;
  AdamState he_state;  // empty unless kLada
};

// Initialises nets with kind-independent seed streams so that kinds sharing a
// layer shape share its initial parameters bit for bit.
ModelBundle build_model(ModelKind kind, const FeatureSchema& schema,
                        const TrainConfig& config, std::uint64_t seed);

// Joint loss and parameter gradients for one batch. `x_source` may be empty
// when the transfer term is inactive (alpha == 1, or NT). For LADA the frozen
// he receives an explicitly zero gradient block.
struct StepGrads {
  double loss = 0.0;
  Gradients g;
  Gradients f;
  bool has_he = false;
  Gradients he;
};

StepGrads compute_joint_grads(const ModelBundle& bundle, const Matrix& x_target,
                              const Matrix& x_source,
                              const std::vector<double>& labels, Mode mode,
                              Rng* rng);

// Fine-tuning loss: plain BCE of f(g(x_source)) against the labels, for every
// kind.
StepGrads compute_finetune_grads(const ModelBundle& bundle,
                                 const Matrix& x_source,
                                 const std::vector<double>& labels, Mode mode,
                                 Rng* rng);

// Trains g (and for LADA first he) on head train-day records. Streams:
// "step1" for he, "train" for the joint loop; both derived from `seed`.
ModelBundle train_base(ModelKind kind, const FeatureSchema& schema,
                       const TrainConfig& config,
                       const std::vector<ImpressionRecord>& records,
                       std::uint64_t seed);

// Resumes the bundle's Adam states and runs fine_tune_epochs of BCE on the
// source view. Empty input is a no-op. Stream: "finetune".
void fine_tune(ModelBundle& bundle,
               const std::vector<ImpressionRecord>& records,
               std::uint64_t seed);

// Eval-mode engagement probabilities, one per record.
std::vector<double> predict(const ModelBundle& bundle,
                            const std::vector<ImpressionRecord>& records,
                            View view);

}  // namespace cda
