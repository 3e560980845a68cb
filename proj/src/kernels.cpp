#include "lnf/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "lnf/parallel.hpp"

#include <thread>

namespace lnf {

int worker_count() {
  static int cached = [] {
    if (const char* env = std::getenv("NODF_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }();
  return cached;
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  int workers = worker_count();
  if (workers <= 1 || n < 2) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (workers > n) workers = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int64_t lo = w * chunk;
    int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lnf

namespace lnf::kernels {

namespace {

double s_dot(const double* x, const double* y, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void s_axpy(double* y, double a, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scal(double* x, double a, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_vadd(double* out, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_vsub(double* out, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_vmul(double* out, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_vfma(double* out, const double* a, const double* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

double s_sum(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

const Backend kScalar = {
    "scalar", s_dot, s_axpy, s_scal, s_vadd, s_vsub, s_vmul, s_vfma, s_sum,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
  static const Backend* selected = [] {
    if (const char* env = std::getenv("NODF_KERNEL")) {
      if (std::strcmp(env, "scalar") == 0) return &kScalar;
    }
    if (const Backend* avx = avx2_backend()) return avx;
    return &kScalar;
  }();
  return *selected;
}

void matmul_acc(const Backend& be, double* c, const double* a, const double* b,
                size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    const double* arow = a + i * k;
    for (size_t t = 0; t < k; ++t) be.axpy(row, arow[t], b + t * n, n);
  }
}

}  // namespace lnf::kernels
