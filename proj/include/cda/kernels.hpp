#pragma once

#include <cstddef>
#include <string_view>

namespace cda::kernels {

// Arithmetic inner loops used by the network engine. Every operation has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant; the
// backend is picked once at startup from CPUID (override with set_backend or
// the CDA_BACKEND environment variable: "scalar" or "avx2"). Within a
// process the selection is fixed, so training stays bit-deterministic.
//
// The two backends are equivalent up to floating-point reassociation/FMA
// rounding, which the kernel equivalence tests bound.

enum class Backend { kScalar, kAvx2 };

/// Backend actually in use for dispatched calls.
Backend active_backend();

/// Force a backend. Throws cda::Error if AVX2 is requested but unavailable.
void set_backend(Backend b);

/// True when the CPU (and build) can run the AVX2 variants.
bool avx2_available();

const char* backend_name(Backend b);

// --- dispatched operations -------------------------------------------------

/// Y[n x out] = X[n x in] * W[in x out], plus bias broadcast per row when
/// bias != nullptr.
void matmul_bias(const double* x, std::size_t n, std::size_t in,
                 const double* w, std::size_t out, const double* bias,
                 double* y);

/// C[n x m] = A[n x k] * B[m x k]^T.
void matmul_abt(const double* a, std::size_t n, std::size_t k, const double* b,
                std::size_t m, double* c);

/// C[k x m] += A[n x k]^T * B[n x m]. Caller zero-fills C first.
void matmul_atb_acc(const double* a, std::size_t n, std::size_t k,
                    const double* b, std::size_t m, double* c);

/// out[j] = sum_i A[i, j].
void colsum(const double* a, std::size_t n, std::size_t m, double* out);

/// y = max(x, 0), elementwise.
void relu(const double* x, double* y, std::size_t n);

/// dz[i] = dh[i] * (h[i] > 0 ? 1 : 0).
void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n);

/// out = a .* b (dropout mask application and friends).
void hadamard(const double* a, const double* b, double* out, std::size_t n);

/// y += alpha * x.
void axpy(double alpha, const double* x, double* y, std::size_t n);

void scale(double alpha, double* x, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);

double sum_sq_diff(const double* a, const double* b, std::size_t n);

/// One Adam update over a flat parameter array. bc1/bc2 are the bias
/// corrections 1 - beta^t for the *incremented* step count t.
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2);

// --- explicit-backend entry points (equivalence tests) ----------------------

namespace scalar {
void matmul_bias(const double* x, std::size_t n, std::size_t in,
                 const double* w, std::size_t out, const double* bias,
                 double* y);
void matmul_abt(const double* a, std::size_t n, std::size_t k, const double* b,
                std::size_t m, double* c);
void matmul_atb_acc(const double* a, std::size_t n, std::size_t k,
                    const double* b, std::size_t m, double* c);
void colsum(const double* a, std::size_t n, std::size_t m, double* out);
void relu(const double* x, double* y, std::size_t n);
void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2);
}  // namespace scalar

#if defined(CDA_HAVE_AVX2_TU)
namespace avx2 {
void matmul_bias(const double* x, std::size_t n, std::size_t in,
                 const double* w, std::size_t out, const double* bias,
                 double* y);
void matmul_abt(const double* a, std::size_t n, std::size_t k, const double* b,
                std::size_t m, double* c);
void matmul_atb_acc(const double* a, std::size_t n, std::size_t k,
                    const double* b, std::size_t m, double* c);
void colsum(const double* a, std::size_t n, std::size_t m, double* out);
void relu(const double* x, double* y, std::size_t n);
void relu_backward(const double* h, const double* dh, double* dz,
                   std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2);
}  // namespace avx2
#endif

}  // namespace cda::kernels
