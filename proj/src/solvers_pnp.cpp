#include <cmath>

#include "lnf/solvers.hpp"

namespace lnf::solvers {

namespace {

// Edge conductivity of the Scharfetter-Gummel flux written in Slotboom form:
// with c = w * exp(-s*phi), the NP operator becomes div(kappa grad w),
// kappa_edge = exp(-s*phibar) * x/sinh(x), x = s*(phi2-phi1)/2. Always > 0.
double sg_edge_coeff(double s_phi1, double s_phi2) {
  double x = 0.5 * (s_phi2 - s_phi1);
  double ratio = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : x / std::sinh(x);
  return std::exp(-0.5 * (s_phi1 + s_phi2)) * ratio;
}

struct PnpWorkspace {
  Grid grid;
  LaplacianSystem poisson;
};

// Solves div(kappa(phi) grad w) = 0 with Dirichlet w = c_b * exp(s*phi_b);
// returns c = w * exp(-s*phi) on the full grid.
std::vector<double> np_solve(const PnpWorkspace& ws, double s,
                             std::span<const double> phi_full,
                             std::span<const double> c_boundary, double cg_tol) {
  const Grid& grid = ws.grid;
  int n = grid.n;
  int n_int = grid.n_interior();
  double inv_h2 = 1.0 / (grid.h * grid.h);
  int64_t stride[2] = {1, n};

  std::vector<double> w_b(grid.n_boundary());
  for (int b = 0; b < grid.n_boundary(); ++b) {
    w_b[b] = c_boundary[b] * std::exp(s * phi_full[grid.boundary_nodes[b]]);
  }

  std::vector<numerics::Triplet> trips;
  trips.reserve(size_t(n_int) * 5);
  std::vector<double> rhs(n_int, 0.0);
  for (int row = 0; row < n_int; ++row) {
    int64_t id = grid.interior_nodes[row];
    double diag = 0.0;
    for (int d = 0; d < 2; ++d) {
      for (int dir : {-1, +1}) {
        int64_t nb = id + dir * stride[d];
        double kappa = sg_edge_coeff(s * phi_full[id], s * phi_full[nb]) * inv_h2;
        diag += kappa;
        int irow = grid.interior_index_of[nb];
        if (irow >= 0) {
          trips.push_back({row, irow, -kappa});
        } else {
          rhs[row] += kappa * w_b[grid.boundary_index_of[nb]];
        }
      }
    }
    trips.push_back({row, row, diag});
  }
  numerics::CsrMatrix m = numerics::build_csr(trips, n_int, n_int);
  numerics::CgResult sol = numerics::cg_solve(m, rhs, {cg_tol, 0, true});

  std::vector<double> c(grid.n_nodes());
  for (int i = 0; i < n_int; ++i) {
    int64_t id = grid.interior_nodes[i];
    c[id] = sol.x[i] * std::exp(-s * phi_full[id]);
  }
  for (int b = 0; b < grid.n_boundary(); ++b) {
    c[grid.boundary_nodes[b]] = c_boundary[b];
  }
  return c;
}

std::vector<double> poisson_solve(const PnpWorkspace& ws,
                                  std::span<const double> g_phi,
                                  std::span<const double> c_plus,
                                  std::span<const double> c_minus,
                                  double cg_tol) {
  const Grid& grid = ws.grid;
  int n_int = grid.n_interior();
  std::vector<double> f(n_int);
  for (int i = 0; i < n_int; ++i) {
    int64_t id = grid.interior_nodes[i];
    f[i] = c_plus[id] - c_minus[id];
  }
  std::vector<double> b = ws.poisson.rhs(g_phi, f);
  numerics::CgResult sol = numerics::cg_solve(ws.poisson.a, b, {cg_tol, 0, true});
  std::vector<double> phi(grid.n_nodes(), 0.0);
  for (int i = 0; i < n_int; ++i) phi[grid.interior_nodes[i]] = sol.x[i];
  for (int bdx = 0; bdx < grid.n_boundary(); ++bdx) {
    phi[grid.boundary_nodes[bdx]] = g_phi[bdx];
  }
  return phi;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

PnpResult gummel_pnp(std::span<const double> g_phi, std::span<const double> g_cp,
                     std::span<const double> g_cm, int n, double tol,
                     int max_sweeps) {
  PnpWorkspace ws{Grid::make(2, n), {}};
  ws.poisson = assemble_laplacian(ws.grid);
  int nb = ws.grid.n_boundary();
  if (static_cast<int>(g_phi.size()) != nb || static_cast<int>(g_cp.size()) != nb ||
      static_cast<int>(g_cm.size()) != nb) {
    throw DimensionError("pnp: boundary trace length mismatch");
  }
  for (int b = 0; b < nb; ++b) {
    if (!(g_cp[b] > 0.0) || !(g_cm[b] > 0.0)) {
      throw ContractError("pnp: concentration traces must be strictly positive");
    }
  }

  const double cg_tol = 1e-12;
  PnpResult res;
  // start from pure diffusion (phi = 0) profiles
  std::vector<double> phi0(ws.grid.n_nodes(), 0.0);
  res.c_plus = np_solve(ws, +1.0, phi0, g_cp, cg_tol);
  res.c_minus = np_solve(ws, -1.0, phi0, g_cm, cg_tol);
  res.phi = phi0;

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    std::vector<double> phi_new =
        poisson_solve(ws, g_phi, res.c_plus, res.c_minus, cg_tol);
    std::vector<double> cp_new = np_solve(ws, +1.0, phi_new, g_cp, cg_tol);
    std::vector<double> cm_new = np_solve(ws, -1.0, phi_new, g_cm, cg_tol);
    double update = std::max({max_abs_diff(phi_new, res.phi),
                              max_abs_diff(cp_new, res.c_plus),
                              max_abs_diff(cm_new, res.c_minus)});
    res.phi = std::move(phi_new);
    res.c_plus = std::move(cp_new);
    res.c_minus = std::move(cm_new);
    res.sweeps = sweep;
    res.final_update = update;
    if (update < tol) return res;
  }
  throw SolverError("pnp: Gummel iteration did not converge", res.final_update);
}

double pnp_coupled_residual(const PnpResult& fields, int n) {
  PnpWorkspace ws{Grid::make(2, n), {}};
  ws.poisson = assemble_laplacian(ws.grid);
  const Grid& grid = ws.grid;
  int n_int = grid.n_interior();
  int nb = grid.n_boundary();
  double inv_h2 = 1.0 / (grid.h * grid.h);
  int64_t stride[2] = {1, n};

  // Poisson: centered 5-point residual, relative to the rhs scale.
  std::vector<double> g_phi(nb), f(n_int);
  for (int b = 0; b < nb; ++b) g_phi[b] = fields.phi[grid.boundary_nodes[b]];
  for (int i = 0; i < n_int; ++i) {
    int64_t id = grid.interior_nodes[i];
    f[i] = fields.c_plus[id] - fields.c_minus[id];
  }
  std::vector<double> b_vec = ws.poisson.rhs(g_phi, f);
  std::vector<double> phi_int(n_int);
  for (int i = 0; i < n_int; ++i) phi_int[i] = fields.phi[grid.interior_nodes[i]];
  std::vector<double> ap = ws.poisson.a.apply(phi_int);
  double b_scale = 1.0, r_poisson = 0.0;
  for (int i = 0; i < n_int; ++i) b_scale = std::max(b_scale, std::abs(b_vec[i]));
  for (int i = 0; i < n_int; ++i) {
    r_poisson = std::max(r_poisson, std::abs(ap[i] - b_vec[i]));
  }
  double worst = r_poisson / b_scale;

  // NP equations: Scharfetter-Gummel residual in Slotboom variables.
  for (double s : {+1.0, -1.0}) {
    const std::vector<double>& c = s > 0 ? fields.c_plus : fields.c_minus;
    std::vector<double> w(grid.n_nodes());
    for (int64_t id = 0; id < grid.n_nodes(); ++id) {
      w[id] = c[id] * std::exp(s * fields.phi[id]);
    }
    double scale = 1.0, r = 0.0;
    for (int row = 0; row < n_int; ++row) {
      int64_t id = grid.interior_nodes[row];
      double acc = 0.0, diag = 0.0;
      for (int d = 0; d < 2; ++d) {
        for (int dir : {-1, +1}) {
          int64_t nbid = id + dir * stride[d];
          double kappa =
              sg_edge_coeff(s * fields.phi[id], s * fields.phi[nbid]) * inv_h2;
          acc += kappa * (w[nbid] - w[id]);
          diag += kappa * std::abs(w[nbid]);
        }
      }
      r = std::max(r, std::abs(acc));
      scale = std::max(scale, diag);
    }
    worst = std::max(worst, r / scale);
  }
  return worst;
}

}  // namespace lnf::solvers
