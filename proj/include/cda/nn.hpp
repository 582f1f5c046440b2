#pragma once

#include <cstdint>
#include <vector>

#include "cda/matrix.hpp"
#include "cda/rng.hpp"

namespace cda {

// Dense feed-forward engine: rectifier hidden layers, identity or logistic
// output, inverted dropout, exact reverse-mode gradients, Adam. Everything is
// a pure function of explicit state; callers own nets, caches and optimizer
// state, so independent nets can run on independent threads.

enum class Activation : std::uint8_t { kIdentity = 0, kLogistic = 1 };

enum class Mode : std::uint8_t { kTrain, kEval };

struct DenseLayer {
  Matrix w;               // [in x out]
  std::vector<double> b;  // [out]
};

struct DenseNet {
  std::vector<DenseLayer> layers;
  Activation output_activation = Activation::kIdentity;
  double dropout_rate = 0.0;
  // dropout_after[g] applies to the gap after layer g (g = 0 .. L-2). The
  // default placement enables every gap except the one between the
  // penultimate and the output layer.
  std::vector<std::uint8_t> dropout_after;

  std::size_t input_dim() const { return layers.front().w.rows; }
  std::size_t output_dim() const { return layers.back().w.cols; }
  /// Hash of the layer dimensions; backward uses it to reject foreign caches.
  std::uint64_t structure_hash() const;
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic in the seed. layer_dims needs >= 2 entries.
DenseNet init_dense_net(const std::vector<std::size_t>& layer_dims,
                        Activation output_activation, double dropout_rate,
                        std::uint64_t seed);

struct ForwardCache {
  std::uint64_t net_hash = 0;
  std::size_t batch = 0;
  Matrix input;
  // Per layer: activations after the nonlinearity but before dropout (for the
  // output layer: after the output activation — this equals `output`).
  std::vector<Matrix> activations;
  // Per gap: inverted-dropout mask (entries 0 or 1/(1-rate)); empty matrix
  // when the gap has no dropout or in eval mode.
  std::vector<Matrix> masks;
  // Per layer: the matrix actually fed into the layer (post-dropout).
  std::vector<Matrix> layer_inputs;
  Matrix output;
};

/// Runs the net on a [batch x in] matrix. In train mode, dropout masks are
/// drawn from `rng` (required iff any gap drops); eval mode is deterministic
/// and mask-free. Logistic outputs are clamped to (0, 1).
ForwardCache forward(const DenseNet& net, const Matrix& x, Mode mode,
                     Rng* rng = nullptr);

struct LayerGrads {
  Matrix dw;
  std::vector<double> db;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Matrix input;  // gradient wrt the forward input; used to chain nets
};

Gradients zero_gradients(const DenseNet& net, std::size_t batch,
                         bool with_input = false);

/// Reverse pass. `d_output` is the loss gradient wrt the net's (post
/// activation) output. Gradients are exact for the composed function
/// including the dropout masks recorded in the cache.
Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const Matrix& d_output);

/// Accumulates `src` scaled by `alpha` into `dst` (layer grads only).
void accumulate_gradients(Gradients& dst, const Gradients& src, double alpha);

// --- losses -----------------------------------------------------------------

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as the predictions argument
};

/// Mean binary cross-entropy over a [n x 1] probability column. Probabilities
/// are clamped to [eps, 1-eps] before the log; the gradient is exact for the
/// clamped expression (zero where the clamp is active).
LossGrad bce_loss(const Matrix& probabilities, const std::vector<double>& labels,
                  double eps = 1e-7);

/// Mean squared error over all entries; grad = 2 (pred - target) / count.
LossGrad mse_loss(const Matrix& predictions, const Matrix& targets);

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  // One (m, v) pair per parameter array, ordered w0, b0, w1, b1, ...
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState init_adam(const DenseNet& net, const AdamConfig& config);

/// Applies one bias-corrected update in place and bumps the step counter.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

// --- small helpers -----------------------------------------------------------

/// Numerically stable logistic, clamped into (0, 1).
double logistic(double z);

/// Hidden activations of the first layer (post-rectifier), eval mode. This is
/// the latent representation h(x) of a one-hidden-layer classifier.
Matrix hidden_activations(const DenseNet& net, const Matrix& x);

}  // namespace cda
