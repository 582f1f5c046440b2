#include "cda/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>

#include "cda/errors.hpp"

namespace cda::kernels {

namespace scalar {

void matmul_bias(const double* x, std::size_t n, std::size_t in,
                 const double* w, std::size_t out, const double* bias,
                 double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y + i * out;
    if (bias) {
      std::memcpy(yi, bias, out * sizeof(double));
    } else {
      std::memset(yi, 0, out * sizeof(double));
    }
    const double* xi = x + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double a = xi[k];
      const double* wk = w + k * out;
      for (std::size_t j = 0; j < out; ++j) yi[j] += a * wk[j];
    }
  }
}

void matmul_abt(const double* a, std::size_t n, std::size_t k, const double* b,
                std::size_t m, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
      ci[j] = acc;
    }
  }
}

void matmul_atb_acc(const double* a, std::size_t n, std::size_t k,
                    const double* b, std::size_t m, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * m;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      if (av == 0.0) continue;
      double* ct = c + t * m;
      for (std::size_t j = 0; j < m; ++j) ct[j] += av * bi[j];
    }
  }
}

void colsum(const double* a, std::size_t n, std::size_t m, double* out) {
  std::memset(out, 0, m * sizeof(double));
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += ai[j];
  }
}

void relu(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dz[i] = h[i] > 0.0 ? dh[i] : 0.0;
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace scalar

namespace {

struct Ops {
  decltype(&scalar::matmul_bias) matmul_bias;
  decltype(&scalar::matmul_abt) matmul_abt;
  decltype(&scalar::matmul_atb_acc) matmul_atb_acc;
  decltype(&scalar::colsum) colsum;
  decltype(&scalar::relu) relu;
  decltype(&scalar::relu_backward) relu_backward;
  decltype(&scalar::hadamard) hadamard;
  decltype(&scalar::axpy) axpy;
  decltype(&scalar::scale) scale;
  decltype(&scalar::dot) dot;
  decltype(&scalar::sum_sq_diff) sum_sq_diff;
  decltype(&scalar::adam_step) adam_step;
};

constexpr Ops kScalarOps = {
    &scalar::matmul_bias,   &scalar::matmul_abt, &scalar::matmul_atb_acc,
    &scalar::colsum,        &scalar::relu,       &scalar::relu_backward,
    &scalar::hadamard,      &scalar::axpy,       &scalar::scale,
    &scalar::dot,           &scalar::sum_sq_diff, &scalar::adam_step};

#if defined(CDA_HAVE_AVX2_TU)
constexpr Ops kAvx2Ops = {
    &avx2::matmul_bias, &avx2::matmul_abt, &avx2::matmul_atb_acc,
    &avx2::colsum,      &avx2::relu,       &avx2::relu_backward,
    &avx2::hadamard,    &avx2::axpy,       &avx2::scale,
    &avx2::dot,         &avx2::sum_sq_diff, &avx2::adam_step};
#endif

Backend g_backend = Backend::kScalar;
const Ops* g_ops = &kScalarOps;
std::once_flag g_init_flag;

void init_backend() {
  Backend pick = avx2_available() ? Backend::kAvx2 : Backend::kScalar;
  if (const char* env = std::getenv("CDA_BACKEND")) {
    const std::string want(env);
    if (want == "scalar") pick = Backend::kScalar;
    else if (want == "avx2" && avx2_available()) pick = Backend::kAvx2;
  }
  g_backend = pick;
#if defined(CDA_HAVE_AVX2_TU)
  g_ops = pick == Backend::kAvx2 ? &kAvx2Ops : &kScalarOps;
#else
  g_ops = &kScalarOps;
#endif
}

const Ops& ops() {
  std::call_once(g_init_flag, init_backend);
  return *g_ops;
}

}  // namespace

bool avx2_available() {
#if defined(CDA_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  std::call_once(g_init_flag, init_backend);
  return g_backend;
}

void set_backend(Backend b) {
  std::call_once(g_init_flag, init_backend);
  if (b == Backend::kAvx2 && !avx2_available())
    throw Error("AVX2 backend requested but not available on this CPU/build");
  g_backend = b;
#if defined(CDA_HAVE_AVX2_TU)
  g_ops = b == Backend::kAvx2 ? &kAvx2Ops : &kScalarOps;
#else
  g_ops = &kScalarOps;
#endif
}

const char* backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

void matmul_bias(const double* x, std::size_t n, std::size_t in,
                 const double* w, std::size_t out, const double* bias,
                 double* y) {
  ops().matmul_bias(x, n, in, w, out, bias, y);
}
void matmul_abt(const double* a, std::size_t n, std::size_t k, const double* b,
                std::size_t m, double* c) {
  ops().matmul_abt(a, n, k, b, m, c);
}
void matmul_atb_acc(const double* a, std::size_t n, std::size_t k,
                    const double* b, std::size_t m, double* c) {
  ops().matmul_atb_acc(a, n, k, b, m, c);
}
void colsum(const double* a, std::size_t n, std::size_t m, double* out) {
  ops().colsum(a, n, m, out);
}
void relu(const double* x, double* y, std::size_t n) { ops().relu(x, y, n); }
void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n) {
  ops().relu_backward(h, dh, dz, n);
}
void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  ops().hadamard(a, b, out, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ops().axpy(alpha, x, y, n);
}
void scale(double alpha, double* x, std::size_t n) { ops().scale(alpha, x, n); }
double dot(const double* a, const double* b, std::size_t n) {
  return ops().dot(a, b, n);
}
double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  return ops().sum_sq_diff(a, b, n);
}
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2) {
  ops().adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace cda::kernels
