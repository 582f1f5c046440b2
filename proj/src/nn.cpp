#include "cda/nn.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "cda/errors.hpp"
#include "cda/kernels.hpp"

namespace cda {

namespace {

constexpr double kLogisticFloor = 1e-15;

void check_finite(const Matrix& x, const char* what) {
  if (!x.all_finite())
    throw DataError(std::string(what) + ": non-finite entries");
}

}  // namespace

double logistic(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  if (p < kLogisticFloor) p = kLogisticFloor;
  if (p > 1.0 - kLogisticFloor) p = 1.0 - kLogisticFloor;
  return p;
}

std::uint64_t DenseNet::structure_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mixin = [&h](std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ull;
  };
  for (const auto& l : layers) {
    mixin(l.w.rows);
    mixin(l.w.cols);
  }
  mixin(static_cast<std::uint64_t>(output_activation));
  return h;
}

DenseNet init_dense_net(const std::vector<std::size_t>& layer_dims,
                        Activation output_activation, double dropout_rate,
                        std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw ArchitectureError("init_dense_net: need at least input and output dims");
  for (const std::size_t d : layer_dims)
    if (d == 0) throw ArchitectureError("init_dense_net: zero-width layer");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ArchitectureError("init_dense_net: dropout_rate must be in [0,1)");

  DenseNet net;
  net.output_activation = output_activation;
  net.dropout_rate = dropout_rate;
  Rng rng(seed);
  const std::size_t n_layers = layer_dims.size() - 1;
  net.layers.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    const std::size_t in = layer_dims[l];
    const std::size_t out = layer_dims[l + 1];
    layer.w = Matrix(in, out);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& wv : layer.w.v) wv = rng.uniform(-bound, bound);
    layer.b.assign(out, 0.0);
    net.layers.push_back(std::move(layer));
  }
  if (n_layers >= 2) {
    net.dropout_after.assign(n_layers - 1, 1);
    net.dropout_after.back() = 0;  // not between penultimate and output layer
  }
  return net;
}

ForwardCache forward(const DenseNet& net, const Matrix& x, Mode mode,
                     Rng* rng) {
  if (net.layers.empty()) throw ArchitectureError("forward: empty net");
  if (x.cols != net.input_dim())
    throw ShapeError("forward: input width " + std::to_string(x.cols) +
                     " != first layer width " +
                     std::to_string(net.input_dim()));
  check_finite(x, "forward input");

  const std::size_t n_layers = net.layers.size();
  const bool drops = mode == Mode::kTrain && net.dropout_rate > 0.0;
  ForwardCache cache;
  cache.net_hash = net.structure_hash();
  cache.batch = x.rows;
  cache.input = x;
  cache.activations.resize(n_layers);
  cache.masks.resize(n_layers >= 1 ? n_layers - 1 : 0);
  cache.layer_inputs.resize(n_layers);

  cache.layer_inputs[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Matrix& in = cache.layer_inputs[l];
    const DenseLayer& layer = net.layers[l];
    Matrix z(in.rows, layer.w.cols);
    kernels::matmul_bias(in.data(), in.rows, layer.w.rows, layer.w.data(),
                         layer.w.cols, layer.b.data(), z.data());
    if (l + 1 == n_layers) {
      if (net.output_activation == Activation::kLogistic) {
        Matrix p(z.rows, z.cols);
        for (std::size_t i = 0; i < z.size(); ++i) p.v[i] = logistic(z.v[i]);
        cache.activations[l] = std::move(p);
      } else {
        cache.activations[l] = std::move(z);
      }
      break;
    }
    Matrix h(z.rows, z.cols);
    kernels::relu(z.data(), h.data(), z.size());
    if (drops && net.dropout_after.size() > l && net.dropout_after[l]) {
      if (!rng) throw DataError("forward: train-mode dropout needs an rng");
      const double keep_scale = 1.0 / (1.0 - net.dropout_rate);
      Matrix mask(h.rows, h.cols);
      for (double& mv : mask.v)
        mv = rng->uniform() >= net.dropout_rate ? keep_scale : 0.0;
      Matrix dropped(h.rows, h.cols);
      kernels::hadamard(h.data(), mask.data(), dropped.data(), h.size());
      cache.masks[l] = std::move(mask);
      cache.layer_inputs[l + 1] = std::move(dropped);
    } else {
      cache.layer_inputs[l + 1] = h;
    }
    cache.activations[l] = std::move(h);
  }
  cache.output = cache.activations.back();
  return cache;
}

Gradients zero_gradients(const DenseNet& net, std::size_t batch,
                         bool with_input) {
  Gradients g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    g.layers[l].dw = Matrix(net.layers[l].w.rows, net.layers[l].w.cols);
    g.layers[l].db.assign(net.layers[l].b.size(), 0.0);
  }
  if (with_input) g.input = Matrix(batch, net.input_dim());
  return g;
}

Gradients backward(const DenseNet& net, const ForwardCache& cache,
                   const Matrix& d_output) {
  if (cache.net_hash != net.structure_hash())
    throw CacheError("backward: cache does not match this network");
  if (cache.layer_inputs.size() != net.layers.size())
    throw CacheError("backward: malformed cache");
  if (d_output.rows != cache.batch || d_output.cols != net.output_dim())
    throw ShapeError("backward: upstream gradient shape mismatch");

  const std::size_t n_layers = net.layers.size();
  Gradients grads;
  grads.layers.resize(n_layers);

  // Output activation.
  Matrix dz = d_output;
  if (net.output_activation == Activation::kLogistic) {
    const Matrix& p = cache.output;
    for (std::size_t i = 0; i < dz.size(); ++i)
      dz.v[i] *= p.v[i] * (1.0 - p.v[i]);
  }

  for (std::size_t li = n_layers; li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const Matrix& in = cache.layer_inputs[li];
    LayerGrads& lg = grads.layers[li];
    lg.dw = Matrix(layer.w.rows, layer.w.cols);
    kernels::matmul_atb_acc(in.data(), in.rows, in.cols, dz.data(), dz.cols,
                            lg.dw.data());
    lg.db.assign(layer.w.cols, 0.0);
    kernels::colsum(dz.data(), dz.rows, dz.cols, lg.db.data());

    // Gradient wrt this layer's input.
    Matrix din(dz.rows, layer.w.rows);
    kernels::matmul_abt(dz.data(), dz.rows, dz.cols, layer.w.data(),
                        layer.w.rows, din.data());
    if (li == 0) {
      grads.input = std::move(din);
      break;
    }
    // Undo dropout then the rectifier of the previous gap/layer.
    const Matrix& mask = cache.masks[li - 1];
    if (mask.size() > 0)
      kernels::hadamard(din.data(), mask.data(), din.data(), din.size());
    const Matrix& h = cache.activations[li - 1];
    dz = Matrix(din.rows, din.cols);
    kernels::relu_backward(h.data(), din.data(), dz.data(), din.size());
  }
  return grads;
}

void accumulate_gradients(Gradients& dst, const Gradients& src, double alpha) {
  if (dst.layers.size() != src.layers.size())
    throw ShapeError("accumulate_gradients: layer count mismatch");
  for (std::size_t l = 0; l < dst.layers.size(); ++l) {
    require_same_shape(dst.layers[l].dw, src.layers[l].dw,
                       "accumulate_gradients");
    kernels::axpy(alpha, src.layers[l].dw.data(), dst.layers[l].dw.data(),
                  dst.layers[l].dw.size());
    kernels::axpy(alpha, src.layers[l].db.data(), dst.layers[l].db.data(),
                  dst.layers[l].db.size());
  }
}

LossGrad bce_loss(const Matrix& probabilities, const std::vector<double>& labels,
                  double eps) {
  if (probabilities.cols != 1)
    throw ShapeError("bce_loss: expected a single probability column");
  if (probabilities.rows != labels.size())
    throw ShapeError("bce_loss: " + std::to_string(probabilities.rows) +
                     " probabilities vs " + std::to_string(labels.size()) +
                     " labels");
  const std::size_t n = labels.size();
  if (n == 0) throw ShapeError("bce_loss: empty batch");

  LossGrad out;
  out.grad = Matrix(n, 1);
  double acc = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probabilities.v[i];
    const double y = labels[i];
    double pc = p;
    bool clamped = false;
    if (pc < eps) {
      pc = eps;
      clamped = true;
    } else if (pc > 1.0 - eps) {
      pc = 1.0 - eps;
      clamped = true;
    }
    acc -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    out.grad.v[i] = clamped ? 0.0 : (pc - y) / (pc * (1.0 - pc)) * inv_n;
  }
  out.loss = acc * inv_n;
  return out;
}

LossGrad mse_loss(const Matrix& predictions, const Matrix& targets) {
  require_same_shape(predictions, targets, "mse_loss");
  const std::size_t count = predictions.size();
  if (count == 0) throw ShapeError("mse_loss: empty input");
  LossGrad out;
  out.grad = Matrix(predictions.rows, predictions.cols);
  const double inv = 1.0 / static_cast<double>(count);
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = predictions.v[i] - targets.v[i];
    acc += d * d;
    out.grad.v[i] = 2.0 * d * inv;
  }
  out.loss = acc * inv;
  return out;
}

AdamState init_adam(const DenseNet& net, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0))
    throw ConfigError("adam: learning_rate must be positive");
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 &&
        config.beta2 < 1.0))
    throw ConfigError("adam: betas must lie in (0,1)");
  AdamState st;
  st.config = config;
  for (const auto& layer : net.layers) {
    st.m.emplace_back(layer.w.size(), 0.0);
    st.v.emplace_back(layer.w.size(), 0.0);
    st.m.emplace_back(layer.b.size(), 0.0);
    st.v.emplace_back(layer.b.size(), 0.0);
  }
  return st;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
  if (grads.layers.size() != net.layers.size())
    throw ShapeError("adam_step: gradient/network layer count mismatch");
  if (state.m.size() != 2 * net.layers.size())
    throw ShapeError("adam_step: optimizer state does not match network");
  const std::uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(t));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    const LayerGrads& lg = grads.layers[l];
    require_same_shape(layer.w, lg.dw, "adam_step");
    if (lg.db.size() != layer.b.size())
      throw ShapeError("adam_step: bias gradient size mismatch");
    if (state.m[2 * l].size() != layer.w.size() ||
        state.v[2 * l].size() != layer.w.size() ||
        state.m[2 * l + 1].size() != layer.b.size() ||
        state.v[2 * l + 1].size() != layer.b.size())
      throw ShapeError("adam_step: optimizer state does not match network");
    kernels::adam_step(layer.w.data(), lg.dw.data(), state.m[2 * l].data(),
                       state.v[2 * l].data(), layer.w.size(),
                       state.config.learning_rate, state.config.beta1,
                       state.config.beta2, state.config.eps, bc1, bc2);
    kernels::adam_step(layer.b.data(), lg.db.data(), state.m[2 * l + 1].data(),
                       state.v[2 * l + 1].data(), layer.b.size(),
                       state.config.learning_rate, state.config.beta1,
                       state.config.beta2, state.config.eps, bc1, bc2);
  }
  state.step = t;
}

Matrix hidden_activations(const DenseNet& net, const Matrix& x) {
  if (net.layers.size() < 2)
    throw ArchitectureError("hidden_activations: net has no hidden layer");
  const DenseLayer& layer = net.layers[0];
  if (x.cols != layer.w.rows)
    throw ShapeError("hidden_activations: input width mismatch");
  Matrix z(x.rows, layer.w.cols);
  kernels::matmul_bias(x.data(), x.rows, layer.w.rows, layer.w.data(),
                       layer.w.cols, layer.b.data(), z.data());
  Matrix h(z.rows, z.cols);
  kernels::relu(z.data(), h.data(), z.size());
  return h;
}

}  // namespace cda
