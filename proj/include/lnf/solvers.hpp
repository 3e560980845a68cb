#pragma once

#include <span>
#include <vector>

#include "lnf/grid.hpp"
#include "lnf/mesh.hpp"

namespace lnf::solvers {

// Continuation + damped-Newton controls shared by the nonlinear PB solves.
// lambda ramps 0 -> 1 over `continuation_steps`, scaling the boundary/source
// load (grid solves) or the nonlinear coefficient k (FEM solves). Damping
// starts at 1 and halves while the residual would increase, floor 2^-8; a
// floored step that still increases the residual is a solver error.
struct HomotopyConfig {
  int continuation_steps = 8;
  double newton_tol = 1e-8;     // on the stated discrete residual, inf-norm
  int max_newton_iters = 50;
  double min_damping = 1.0 / 256.0;
  int picard_iters = 2;         // FEM warm start per continuation step
  double cg_tol = 1e-10;
};

// Defect diagnostics recorded by the nonlinear solvers (residual histories
// per continuation step, for the monotonicity property).
struct NewtonTrace {
  std::vector<std::vector<double>> residuals;  // accepted iterates per step
};

// -grad^2 u + k sinh(u) = f on the unit square/cube, u = g on the boundary
// (g in the Grid's boundary order). f is on interior nodes in interior order,
// empty = zero. Returns the full-grid field with boundary values written in.
std::vector<double> solve_pb_grid(const Grid& grid, double k,
                                  std::span<const double> f,
                                  std::span<const double> g,
                                  const HomotopyConfig& cfg = {},
                                  NewtonTrace* trace = nullptr);

// Source-free PB with P1 elements on an unstructured mesh; g holds Dirichlet
// values per boundary node in loop order. Picard warm start, then damped
// Newton, per continuation step. Returns the full node field.
std::vector<double> solve_pb_fem(const Mesh& mesh, double k,
                                 std::span<const double> g,
                                 const HomotopyConfig& cfg = {},
                                 NewtonTrace* trace = nullptr);

// P1 stiffness matrix over all nodes (no boundary conditions applied).
numerics::CsrMatrix fem_stiffness(const Mesh& mesh);

// Residual of the discrete PB system on free (non-Dirichlet) nodes:
// K u + k * \int sinh(u) phi_i, 3-point Gauss. Used by dataset verification.
double fem_pb_residual_inf(const Mesh& mesh, double k, std::span<const double> u);

// Viscous Burgers on [0, 2pi) with ETDRK4 on the fine periodic grid.
// Snapshots at r*(T/n_record), r = 1..n_record (t=0 excluded). Set
// `advection` false for the pure heat-equation limit.
struct BurgersTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> snapshots;  // fine-grid fields
};
BurgersTrajectory etdrk4_burgers(std::span<const double> u0, double nu,
                                 double dt, double t_final, int n_record,
                                 bool advection = true);

// 2-D incompressible Navier-Stokes, vorticity form, on the [0,1)^2 torus,
// 2/3-dealiased pseudo-spectral advection (explicit) + Crank-Nicolson
// viscosity. Snapshots every `record_every`, t=0 excluded. `forced` applies
// f = 0.1 (sin(2 pi (x+y)) + cos(2 pi (x+y))).
struct NsConfig {
  double nu = 1e-3;
  double dt = 1e-4;
  double t_final = 50.0;
  double record_every = 1.0;
  bool forced = true;
};
std::vector<std::vector<double>> ns_rollout(std::span<const double> omega0,
                                            int n, const NsConfig& cfg = {});

// Steady PNP (-lap phi = c+ - c-; div(grad c +- c grad phi) = 0) on the unit
// square via Gummel alternation. NP solves use Scharfetter-Gummel fluxes in
// Slotboom form, which keeps the systems SPD and the concentrations positive.
struct PnpResult {
  std::vector<double> phi, c_plus, c_minus;  // full n*n fields
  int sweeps = 0;
  double final_update = 0.0;
};
PnpResult gummel_pnp(std::span<const double> g_phi, std::span<const double> g_cp,
                     std::span<const double> g_cm, int n, double tol = 1e-8,
                     int max_sweeps = 200);

// Relative inf-norm residuals of the coupled centered-difference/SG system,
// evaluated on given fields (for verification). Returns the max over the
// three equations.
double pnp_coupled_residual(const PnpResult& fields, int n);

// -div(a grad u) = 1 on the unit square, u = 0 on the boundary, arithmetic
// face averages, CG. `a` and the result are full n*n grids.
std::vector<double> darcy_solve(std::span<const double> a, int n);

}  // namespace lnf::solvers
