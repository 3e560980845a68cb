#pragma once

#include <complex>
#include <span>
#include <vector>

#include "lnf/error.hpp"

namespace lnf::numerics {

using cplx = std::complex<double>;

// In-place radix-2 transform; length must be a power of two. The inverse
// carries the 1/N scaling, so ifft(fft(x)) == x.
void fft_1d(std::span<cplx> x, bool inverse);

// Row-major [n_rows, n_cols]; rows then columns, both power-of-two lengths.
void fft_2d(std::span<cplx> x, int n_rows, int n_cols, bool inverse);

struct Triplet {
  int row;
  int col;
  double value;
};

struct CsrMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int64_t> row_ptr;  // length n_rows + 1, monotone
  std::vector<int> col_idx;      // sorted within each row, no duplicates
  std::vector<double> values;

  void matvec(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
};

// Duplicate (row, col) entries are summed; rows come out sorted.
CsrMatrix build_csr(std::span<const Triplet> triplets, int n_rows, int n_cols);

struct CgOptions {
  double tol = 1e-10;   // on ||Ax-b|| / ||b||
  int max_iter = 0;     // 0 = 10 * n
  bool jacobi = true;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double rel_residual = 0.0;
  // preconditioned residual norm per iteration (including the start)
  std::vector<double> residual_history;
};

// Conjugate gradient for SPD systems, optionally Jacobi-preconditioned.
// Throws SolverError (carrying the achieved residual) on non-convergence and
// on a zero diagonal when preconditioning is requested.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b,
                  const CgOptions& opts = {});

// Fields sampled at i/(N-1) on [0,1]^2; bilinear interpolation at the coarse
// nodes. Corners map exactly.
std::vector<double> bilinear_downsample(std::span<const double> fine, int n_fine,
                                        int n_coarse);

// Periodic signal: zero all modes |m| >= n_coarse/2, inverse transform, take
// every (n_fine/n_coarse)-th sample. Both sizes must be powers of two.
std::vector<double> spectral_lowpass_downsample(std::span<const double> u_fine,
                                                int n_coarse);

}  // namespace lnf::numerics
