#pragma once

#include <cstddef>

namespace lnf::kernels {

// Hot arithmetic loops behind a runtime-dispatched backend. The scalar table
// is the reference; the AVX2 table (x86-64 with AVX2+FMA detected at startup)
// must agree with it elementwise up to FMA/reduction-order rounding, which
// the kernel equivalence tests pin down. Dispatch is resolved once per
// process, so repeated runs on one machine stay bit-identical.
struct Backend {
  const char* name;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double* y, double a, const double* x, size_t n);
  // x[i] *= a
  void (*scal)(double* x, double a, size_t n);
  // out[i] = a[i] (+|-|*) b[i]
  void (*vadd)(double* out, const double* a, const double* b, size_t n);
  void (*vsub)(double* out, const double* a, const double* b, size_t n);
  void (*vmul)(double* out, const double* a, const double* b, size_t n);
  // out[i] += a[i] * b[i]
  void (*vfma)(double* out, const double* a, const double* b, size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, size_t n);
};

// Reference implementation, always available.
const Backend& scalar_backend();

// AVX2+FMA implementation, or nullptr when the CPU (or build) lacks it.
const Backend* avx2_backend();

// Selected backend: AVX2 when available, unless NODF_KERNEL=scalar overrides.
const Backend& active();

// C[m,n] += A[m,k] * B[k,n], row-major, using the given backend's axpy.
void matmul_acc(const Backend& be, double* c, const double* a, const double* b,
                size_t m, size_t k, size_t n);

}  // namespace lnf::kernels
