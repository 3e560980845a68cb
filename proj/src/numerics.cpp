#include "lnf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "lnf/kernels.hpp"

namespace lnf::numerics {

namespace {

bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Twiddle factors exp(-2*pi*i*j/n), j < n/2, cached per size. Thread-local so
// parallel dataset generation does not contend.
const std::vector<cplx>& twiddles(int n) {
  thread_local std::map<int, std::vector<cplx>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> w(n / 2);
  for (int j = 0; j < n / 2; ++j) {
    double ang = -2.0 * std::numbers::pi * j / n;
    w[j] = cplx(std::cos(ang), std::sin(ang));
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

void fft_1d(std::span<cplx> x, bool inverse) {
  int n = static_cast<int>(x.size());
  if (!is_pow2(n)) throw DimensionError("fft_1d length must be a power of two");
  if (n == 1) return;
  // bit reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const std::vector<cplx>& w = twiddles(n);
  for (int len = 2; len <= n; len <<= 1) {
    int step = n / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < len / 2; ++j) {
        cplx tw = w[j * step];
        if (inverse) tw = std::conj(tw);
        cplx u = x[i + j];
        cplx v = x[i + j + len / 2] * tw;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    double scale = 1.0 / n;
    for (auto& c : x) c *= scale;
  }
}

void fft_2d(std::span<cplx> x, int n_rows, int n_cols, bool inverse) {
  if (!is_pow2(n_rows) || !is_pow2(n_cols)) {
    throw DimensionError("fft_2d axes must be powers of two");
  }
  if (static_cast<int64_t>(x.size()) != int64_t(n_rows) * n_cols) {
    throw DimensionError("fft_2d buffer size mismatch");
  }
  for (int r = 0; r < n_rows; ++r) {
    fft_1d(x.subspan(int64_t(r) * n_cols, n_cols), inverse);
  }
  std::vector<cplx> col(n_rows);
  for (int c = 0; c < n_cols; ++c) {
    for (int r = 0; r < n_rows; ++r) col[r] = x[int64_t(r) * n_cols + c];
    fft_1d(col, inverse);
    for (int r = 0; r < n_rows; ++r) x[int64_t(r) * n_cols + c] = col[r];
  }
}

void CsrMatrix::matvec(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != n_cols || static_cast<int>(y.size()) != n_rows) {
    throw DimensionError("csr matvec size mismatch");
  }
  for (int r = 0; r < n_rows; ++r) {
    double acc = 0.0;
    for (int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      acc += values[p] * x[col_idx[p]];
    }
    y[r] = acc;
  }
}

std::vector<double> CsrMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(n_rows);
  matvec(x, y);
  return y;
}

CsrMatrix build_csr(std::span<const Triplet> triplets, int n_rows, int n_cols) {
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols) {
      throw DimensionError("csr triplet index out of range");
    }
  }
  std::vector<Triplet> sorted(triplets.begin(), triplets.end());
  std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(n_rows + 1, 0);
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    double acc = 0.0;
    while (j < sorted.size() && sorted[j].row == sorted[i].row &&
           sorted[j].col == sorted[i].col) {
      acc += sorted[j].value;
      ++j;
    }
    m.col_idx.push_back(sorted[i].col);
    m.values.push_back(acc);
    m.row_ptr[sorted[i].row + 1] += 1;
    i = j;
  }
  for (int r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b,
                  const CgOptions& opts) {
  if (a.n_rows != a.n_cols) throw DimensionError("cg_solve needs a square matrix");
  int n = a.n_rows;
  if (static_cast<int>(b.size()) != n) throw DimensionError("cg_solve rhs size mismatch");
  for (double v : b) {
    if (!std::isfinite(v)) throw ContractError("cg_solve rhs must be finite");
  }
  const auto& be = kernels::active();

  std::vector<double> inv_diag;
  if (opts.jacobi) {
    inv_diag.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
      double d = 0.0;
      for (int64_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
        if (a.col_idx[p] == r) d = a.values[p];
      }
      if (d == 0.0) throw SolverError("cg_solve: zero diagonal with Jacobi preconditioning");
      inv_diag[r] = 1.0 / d;
    }
  }

  CgResult res;
  res.x.assign(n, 0.0);
  double bnorm = std::sqrt(be.dot(b.data(), b.data(), n));
  if (bnorm == 0.0) {
    res.rel_residual = 0.0;
    res.residual_history.push_back(0.0);
    return res;
  }
  int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

  std::vector<double> r(b.begin(), b.end());  // r = b - A*0
  std::vector<double> z(n), p(n), ap(n);
  auto precond = [&](const std::vector<double>& rin, std::vector<double>& zout) {
    if (opts.jacobi) {
      for (int i = 0; i < n; ++i) zout[i] = inv_diag[i] * rin[i];
    } else {
      zout = rin;
    }
  };
  precond(r, z);
  p = z;
  double rz = be.dot(r.data(), z.data(), n);
  res.residual_history.push_back(std::sqrt(std::max(0.0, rz)));

  double rel = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    a.matvec(p, ap);
    double pap = be.dot(p.data(), ap.data(), n);
    if (pap <= 0.0) {
      throw SolverError("cg_solve: matrix is not positive definite", rel);
    }
    double alpha = rz / pap;
    be.axpy(res.x.data(), alpha, p.data(), n);
    be.axpy(r.data(), -alpha, ap.data(), n);
    res.iterations = it + 1;
    rel = std::sqrt(be.dot(r.data(), r.data(), n)) / bnorm;
    precond(r, z);
    double rz_new = be.dot(r.data(), z.data(), n);
    res.residual_history.push_back(std::sqrt(std::max(0.0, rz_new)));
    if (rel <= opts.tol) {
      res.rel_residual = rel;
      return res;
    }
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("cg_solve failed to converge", rel);
}

std::vector<double> bilinear_downsample(std::span<const double> fine, int n_fine,
                                        int n_coarse) {
  if (n_coarse < 2 || n_fine < n_coarse) {
    throw DimensionError("bilinear_downsample requires n_fine >= n_coarse >= 2");
  }
  if (static_cast<int64_t>(fine.size()) != int64_t(n_fine) * n_fine) {
    throw DimensionError("bilinear_downsample input size mismatch");
  }
  std::vector<double> coarse(int64_t(n_coarse) * n_coarse);
  double scale = double(n_fine - 1) / double(n_coarse - 1);
  for (int i = 0; i < n_coarse; ++i) {
    double fy = i * scale;
    int y0 = std::min(static_cast<int>(fy), n_fine - 2);
    double wy = fy - y0;
    for (int j = 0; j < n_coarse; ++j) {
      double fx = j * scale;
      int x0 = std::min(static_cast<int>(fx), n_fine - 2);
      double wx = fx - x0;
      const double* row0 = fine.data() + int64_t(y0) * n_fine;
      const double* row1 = row0 + n_fine;
      coarse[int64_t(i) * n_coarse + j] =
          (1 - wy) * ((1 - wx) * row0[x0] + wx * row0[x0 + 1]) +
          wy * ((1 - wx) * row1[x0] + wx * row1[x0 + 1]);
    }
  }
  return coarse;
}

std::vector<double> spectral_lowpass_downsample(std::span<const double> u_fine,
                                                int n_coarse) {
  int n_fine = static_cast<int>(u_fine.size());
  if (!is_pow2(n_fine) || !is_pow2(n_coarse) || n_coarse > n_fine) {
    throw DimensionError("spectral_lowpass_downsample needs pow2 sizes, coarse <= fine");
  }
  std::vector<cplx> spec(u_fine.begin(), u_fine.end());
  fft_1d(spec, false);
  int keep = n_coarse / 2;  // retain |m| < keep
  for (int m = 0; m < n_fine; ++m) {
    int signed_m = m <= n_fine / 2 ? m : m - n_fine;
    if (std::abs(signed_m) >= keep) spec[m] = 0.0;
  }
  fft_1d(spec, true);
  int stride = n_fine / n_coarse;
  std::vector<double> out(n_coarse);
  for (int i = 0; i < n_coarse; ++i) out[i] = spec[int64_t(i) * stride].real();
  return out;
}

}  // namespace lnf::numerics
