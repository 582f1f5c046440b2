// AVX2+FMA variants of the arithmetic kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the dispatch
// table in kernels.cpp, so the rest of the build stays generic.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "cda/kernels.hpp"

namespace cda::kernels::avx2 {

namespace {

inline double hsum(__m256d x) {
  const __m128d lo = _mm256_castpd256_pd128(x);
  const __m128d hi = _mm256_extractf128_pd(x, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

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
      if (a == 0.0) continue;
      const __m256d av = _mm256_set1_pd(a);
      const double* wk = w + k * out;
      std::size_t j = 0;
      for (; j + 4 <= out; j += 4) {
        __m256d acc = _mm256_loadu_pd(yi + j);
        acc = _mm256_fmadd_pd(av, _mm256_loadu_pd(wk + j), acc);
        _mm256_storeu_pd(yi + j, acc);
      }
      for (; j < out; ++j) yi[j] += a * wk[j];
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
      __m256d acc = _mm256_setzero_pd();
      std::size_t t = 0;
      for (; t + 4 <= k; t += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + t), _mm256_loadu_pd(bj + t),
                              acc);
      double s = hsum(acc);
      for (; t < k; ++t) s += ai[t] * bj[t];
      ci[j] = s;
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
      const __m256d avv = _mm256_set1_pd(av);
      double* ct = c + t * m;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        __m256d acc = _mm256_loadu_pd(ct + j);
        acc = _mm256_fmadd_pd(avv, _mm256_loadu_pd(bi + j), acc);
        _mm256_storeu_pd(ct + j, acc);
      }
      for (; j < m; ++j) ct[j] += av * bi[j];
    }
  }
}

void colsum(const double* a, std::size_t n, std::size_t m, double* out) {
  std::memset(out, 0, m * sizeof(double));
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4)
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j),
                                              _mm256_loadu_pd(ai + j)));
    for (; j < m; ++j) out[j] += ai[j];
  }
}

void relu(const double* x, double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(h + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dz + i, _mm256_and_pd(mask, _mm256_loadu_pd(dh + i)));
  }
  for (; i < n; ++i) dz[i] = h[i] > 0.0 ? dh[i] : 0.0;
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d b2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d bc1v = _mm256_set1_pd(bc1);
  const __m256d bc2v = _mm256_set1_pd(bc2);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d epsv = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_fmadd_pd(b1, mi, _mm256_mul_pd(b1c, gi));
    vi = _mm256_fmadd_pd(b2, vi, _mm256_mul_pd(b2c, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bc1v);
    const __m256d vhat = _mm256_div_pd(vi, bc2v);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace cda::kernels::avx2
