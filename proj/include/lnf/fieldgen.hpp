#pragma once

#include <array>
#include <vector>

#include "lnf/grid.hpp"
#include "lnf/rng.hpp"

namespace lnf::fieldgen {

// Harmonic function built from log-kernel sources outside the domain (the
// MAD family for the Laplace benchmark). boundary/field are jointly scaled
// to max-abs 1.
struct LaplaceSample {
  std::vector<double> boundary;  // grid boundary order
  std::vector<double> field;     // full grid
};
LaplaceSample laplace_mad_sample(const Grid& grid, int n_sources, double eps,
                                 Rng& rng);

// Low-mode random Fourier series u0(x) = sum (a cos(mx) + b sin(mx))/m^alpha
// on [0, 2pi), shifted to zero mean and scaled to unit standard deviation.
std::vector<double> fourier_ic_1d(int n, int max_mode, double alpha, Rng& rng);

// Periodic 1-D GRF mixture over a boundary loop: low + 0.25 * high with
// amplitude (m^2 + tau^2)^(-alpha/2), (alpha, tau) = (2.5, 3) and (1.5, 12);
// normalized to max-abs 1.
std::vector<double> boundary_grf_mix(int n_b, Rng& rng);

// Random [2,50,50,1] sine network; weights N(0,1)/sqrt(fan_in), biases
// Uniform(-pi, pi). Provides exact pointwise values and Laplacians, so the
// MAD forcing for the source-driven PB dataset is analytic.
struct SineNet {
  static constexpr int kWidth = 50;
  std::array<std::array<double, 2>, kWidth> w1;
  std::array<double, kWidth> b1;
  std::array<std::array<double, kWidth>, kWidth> w2;
  std::array<double, kWidth> b2;
  std::array<double, kWidth> w3;
  double b3;

  double eval(double x, double y) const;
  double laplacian(double x, double y) const;
};
SineNet sample_sine_net(Rng& rng);
std::vector<double> sine_net_field(const SineNet& net, const Grid& grid);

// Periodic 2-D GRF: white noise filtered by (|k|^2 + tau^2)^(-alpha/2) with
// integer wavenumbers, DC removed. Output is real with zero mean.
std::vector<double> grf_periodic_2d(int n, double alpha, double tau, Rng& rng);

// Screened-Coulomb boundary data for the 3-D cube: sources in the shell
// [-0.7,1.7]^3 \ [-0.2,1.2]^3, weights U(-1,1), kappa U(0.5,3); evaluated at
// the grid's unique boundary nodes and scaled to max-abs 1.
std::vector<double> yukawa_boundary_3d(const Grid& grid3, int n_sources, Rng& rng);

// Truncated 8-mode Fourier trace around a boundary loop with 1/m^2 decay,
// base level 1; fluctuations are rescaled when needed so min >= floor_val.
std::vector<double> fourier_boundary_positive(int n_b, double floor_val, Rng& rng);

// The shift-and-rescale rule used above: 1 + fluctuation, with the
// fluctuation shrunk about the base level whenever the minimum would fall
// below floor_val. A zero fluctuation yields the constant trace 1.
std::vector<double> positivity_shift(std::vector<double> fluctuation,
                                     double floor_val);

// The unshifted zero-mean series (the phi trace of the PNP benchmark).
std::vector<double> fourier_boundary_zero_mean(int n_b, Rng& rng);

// Max |5-point Laplacian| of a 2-D grid field over interior nodes that are
// at least `margin` from the boundary and whose indices are multiples of
// `node_stride`. Refinement audits of the harmonic MAD family compare grids
// N and 2N-1 at the shared coarse nodes (stride 1 vs 2), where the pure h^2
// scaling survives sources sitting close to the boundary.
double harmonic_residual_max(const Grid& grid, std::span<const double> field,
                             int node_stride, double margin);

}  // namespace lnf::fieldgen
