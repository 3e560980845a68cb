#include <algorithm>
#include <cmath>

#include "lnf/solvers.hpp"

namespace lnf::solvers {

namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Positions of the diagonal entries inside a CSR value array.
std::vector<int64_t> diag_positions(const numerics::CsrMatrix& a) {
  std::vector<int64_t> pos(a.n_rows, -1);
  for (int r = 0; r < a.n_rows; ++r) {
    for (int64_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      if (a.col_idx[p] == r) pos[r] = p;
    }
    if (pos[r] < 0) throw ContractError("matrix row without diagonal entry");
  }
  return pos;
}

}  // namespace

std::vector<double> solve_pb_grid(const Grid& grid, double k,
                                  std::span<const double> f,
                                  std::span<const double> g,
                                  const HomotopyConfig& cfg,
                                  NewtonTrace* trace) {
  if (k < 0) throw ContractError("pb: k must be >= 0");
  if (static_cast<int>(g.size()) != grid.n_boundary()) {
    throw DimensionError("pb: boundary vector length mismatch");
  }
  for (double v : g) {
    if (!std::isfinite(v)) throw ContractError("pb: boundary values must be finite");
  }
  if (!f.empty() && static_cast<int>(f.size()) != grid.n_interior()) {
    throw DimensionError("pb: source vector must live on interior nodes");
  }

  LaplacianSystem sys = assemble_laplacian(grid);
  std::vector<int64_t> dpos = diag_positions(sys.a);
  int n_int = grid.n_interior();
  std::vector<double> u(n_int, 0.0);
  numerics::CsrMatrix jac = sys.a;

  auto residual = [&](std::span<const double> ui, std::span<const double> rhs,
                      std::vector<double>& out) {
    sys.a.matvec(ui, out);
    for (int i = 0; i < n_int; ++i) out[i] += k * std::sinh(ui[i]) - rhs[i];
  };

  std::vector<double> rhs(n_int), fres(n_int), ftrial(n_int), utrial(n_int);
  numerics::CgOptions cg{cfg.cg_tol, 0, true};

  for (int step = 1; step <= cfg.continuation_steps; ++step) {
    double lambda = double(step) / cfg.continuation_steps;
    // load scaling: boundary and source ramp together
    std::vector<double> gl(g.begin(), g.end());
    for (double& v : gl) v *= lambda;
    std::vector<double> fl(f.begin(), f.end());
    for (double& v : fl) v *= lambda;
    rhs = sys.rhs(gl, fl);

    residual(u, rhs, fres);
    double fnorm = inf_norm(fres);
    if (trace) trace->residuals.push_back({fnorm});

    int it = 0;
    while (fnorm > cfg.newton_tol) {
      if (++it > cfg.max_newton_iters) {
        throw SolverError("pb grid: Newton did not converge", fnorm);
      }
      jac.values = sys.a.values;
      for (int i = 0; i < n_int; ++i) jac.values[dpos[i]] += k * std::cosh(u[i]);
      std::vector<double> neg_f(fres);
      for (double& v : neg_f) v = -v;
      numerics::CgResult delta = numerics::cg_solve(jac, neg_f, cg);

      double s = 1.0;
      while (true) {
        for (int i = 0; i < n_int; ++i) utrial[i] = u[i] + s * delta.x[i];
        residual(utrial, rhs, ftrial);
        double ftn = inf_norm(ftrial);
        if (ftn < fnorm) {
          u = utrial;
          fres = ftrial;
          fnorm = ftn;
          if (trace) trace->residuals.back().push_back(fnorm);
          break;
        }
        if (s <= cfg.min_damping) {
          throw SolverError("pb grid: damped Newton stalled", fnorm);
        }
        s *= 0.5;
      }
    }
  }

  std::vector<double> full(grid.n_nodes(), 0.0);
  for (int i = 0; i < n_int; ++i) full[grid.interior_nodes[i]] = u[i];
  for (int b = 0; b < grid.n_boundary(); ++b) full[grid.boundary_nodes[b]] = g[b];
  return full;
}

// --- P1 FEM ------------------------------------------------------------

namespace {

struct TriGeom {
  double area;
  double bx[3], by[3];  // basis gradients: grad(lambda_i) = (bx_i, by_i)
};

TriGeom tri_geom(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const auto& p0 = mesh.nodes[tri[0]];
  const auto& p1 = mesh.nodes[tri[1]];
  const auto& p2 = mesh.nodes[tri[2]];
  double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  if (det < 2e-14) throw MeshError("degenerate triangle in FEM assembly");
  TriGeom gm;
  gm.area = 0.5 * det;
  gm.bx[0] = (p1[1] - p2[1]) / det;
  gm.by[0] = (p2[0] - p1[0]) / det;
  gm.bx[1] = (p2[1] - p0[1]) / det;
  gm.by[1] = (p0[0] - p2[0]) / det;
  gm.bx[2] = (p0[1] - p1[1]) / det;
  gm.by[2] = (p1[0] - p0[0]) / det;
  return gm;
}

// Degree-2 exact quadrature: barycentric points, weight area/3 each.
constexpr double kQuadPts[3][3] = {
    {2.0 / 3, 1.0 / 6, 1.0 / 6},
    {1.0 / 6, 2.0 / 3, 1.0 / 6},
    {1.0 / 6, 1.0 / 6, 2.0 / 3},
};

// N_i(u) = \int sinh(u_h) phi_i over the mesh.
std::vector<double> sinh_load(const Mesh& mesh, std::span<const double> u) {
  std::vector<double> out(mesh.n_nodes(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double w = mesh.triangle_area(t) / 3.0;
    for (const auto& q : kQuadPts) {
      double uq = q[0] * u[tri[0]] + q[1] * u[tri[1]] + q[2] * u[tri[2]];
      double s = std::sinh(uq);
      for (int i = 0; i < 3; ++i) out[tri[i]] += w * s * q[i];
    }
  }
  return out;
}

// M_ij(u) = \int cosh(u_h) phi_i phi_j, as triplets.
void cosh_mass_triplets(const Mesh& mesh, std::span<const double> u,
                        double scale, std::vector<numerics::Triplet>& trips,
                        std::span<const int> free_index) {
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double w = mesh.triangle_area(t) / 3.0;
    for (const auto& q : kQuadPts) {
      double uq = q[0] * u[tri[0]] + q[1] * u[tri[1]] + q[2] * u[tri[2]];
      double c = scale * w * std::cosh(uq);
      for (int i = 0; i < 3; ++i) {
        int fi = free_index[tri[i]];
        if (fi < 0) continue;
        for (int j = 0; j < 3; ++j) {
          int fj = free_index[tri[j]];
          if (fj < 0) continue;
          trips.push_back({fi, fj, c * q[i] * q[j]});
        }
      }
    }
  }
}

}  // namespace

numerics::CsrMatrix fem_stiffness(const Mesh& mesh) {
  std::vector<numerics::Triplet> trips;
  trips.reserve(size_t(mesh.n_triangles()) * 9);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    TriGeom gm = tri_geom(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double kij = gm.area * (gm.bx[i] * gm.bx[j] + gm.by[i] * gm.by[j]);
        trips.push_back({tri[i], tri[j], kij});
      }
    }
  }
  return numerics::build_csr(trips, mesh.n_nodes(), mesh.n_nodes());
}

double fem_pb_residual_inf(const Mesh& mesh, double k, std::span<const double> u) {
  numerics::CsrMatrix kmat = fem_stiffness(mesh);
  std::vector<double> ku = kmat.apply(u);
  std::vector<double> nl = sinh_load(mesh, u);
  std::vector<char> on_boundary(mesh.n_nodes(), 0);
  for (int b : mesh.boundary_nodes()) on_boundary[b] = 1;
  double m = 0.0;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (!on_boundary[i]) m = std::max(m, std::abs(ku[i] + k * nl[i]));
  }
  return m;
}

std::vector<double> solve_pb_fem(const Mesh& mesh, double k,
                                 std::span<const double> g,
                                 const HomotopyConfig& cfg, NewtonTrace* trace) {
  mesh.validate();
  std::vector<int> bnodes = mesh.boundary_nodes();
  if (g.size() != bnodes.size()) {
    throw DimensionError("pb fem: boundary value count mismatch");
  }
  int n = mesh.n_nodes();
  std::vector<int> free_index(n, -1);
  {
    std::vector<char> on_boundary(n, 0);
    for (int b : bnodes) on_boundary[b] = 1;
    int fi = 0;
    for (int i = 0; i < n; ++i) {
      if (!on_boundary[i]) free_index[i] = fi++;
    }
  }
  int n_free = 0;
  for (int i = 0; i < n; ++i) n_free += free_index[i] >= 0;
  if (n_free == 0) throw MeshError("pb fem: mesh has no interior nodes");

  numerics::CsrMatrix kfull = fem_stiffness(mesh);
  // K restricted to free rows/cols, plus the Dirichlet coupling K_fb.
  std::vector<numerics::Triplet> ktrips;
  std::vector<std::vector<std::pair<int, double>>> kfb(n_free);
  for (int i = 0; i < n; ++i) {
    int fi = free_index[i];
    if (fi < 0) continue;
    for (int64_t p = kfull.row_ptr[i]; p < kfull.row_ptr[i + 1]; ++p) {
      int j = kfull.col_idx[p];
      int fj = free_index[j];
      if (fj >= 0) {
        ktrips.push_back({fi, fj, kfull.values[p]});
      } else {
        kfb[fi].emplace_back(j, kfull.values[p]);
      }
    }
  }
  numerics::CsrMatrix kff = numerics::build_csr(ktrips, n_free, n_free);

  std::vector<double> u(n, 0.0);
  for (size_t b = 0; b < bnodes.size(); ++b) u[bnodes[b]] = g[b];

  std::vector<double> kfb_g(n_free, 0.0);
  for (int fi = 0; fi < n_free; ++fi) {
    for (auto [j, v] : kfb[fi]) kfb_g[fi] += v * u[j];
  }
  numerics::CgOptions cg{cfg.cg_tol, 0, true};

  auto scatter = [&](std::span<const double> x) {
    for (int i = 0; i < n; ++i) {
      if (free_index[i] >= 0) u[i] = x[free_index[i]];
    }
  };
  // base state: linear problem (lambda = 0)
  {
    std::vector<double> rhs(n_free);
    for (int fi = 0; fi < n_free; ++fi) rhs[fi] = -kfb_g[fi];
    numerics::CgResult sol = numerics::cg_solve(kff, rhs, cg);
    scatter(sol.x);
  }
  if (k == 0.0) return u;

  auto eval_residual = [&](double keff, std::vector<double>& out) {
    std::vector<double> nl = sinh_load(mesh, u);
    std::vector<double> uf_local(n_free);
    for (int i = 0; i < n; ++i) {
      if (free_index[i] >= 0) uf_local[free_index[i]] = u[i];
    }
    out = kff.apply(uf_local);
    for (int fi = 0; fi < n_free; ++fi) out[fi] += kfb_g[fi];
    for (int i = 0; i < n; ++i) {
      int fi = free_index[i];
      if (fi >= 0) out[fi] += keff * nl[i];
    }
  };

  std::vector<double> fres, ftrial, usave(n);
  for (int step = 1; step <= cfg.continuation_steps; ++step) {
    double keff = k * double(step) / cfg.continuation_steps;

    // Picard warm start: lag the nonlinearity through a linear solve
    for (int p = 0; p < cfg.picard_iters; ++p) {
      std::vector<double> nl = sinh_load(mesh, u);
      std::vector<double> rhs(n_free);
      for (int i = 0; i < n; ++i) {
        int fi = free_index[i];
        if (fi >= 0) rhs[fi] = -kfb_g[fi] - keff * nl[i];
      }
      numerics::CgResult sol = numerics::cg_solve(kff, rhs, cg);
      scatter(sol.x);
    }

    eval_residual(keff, fres);
    double fnorm = inf_norm(fres);
    if (trace) trace->residuals.push_back({fnorm});

    int it = 0;
    while (fnorm > cfg.newton_tol) {
      if (++it > cfg.max_newton_iters) {
        throw SolverError("pb fem: Newton did not converge", fnorm);
      }
      std::vector<numerics::Triplet> jtrips = ktrips;
      cosh_mass_triplets(mesh, u, keff, jtrips, free_index);
      numerics::CsrMatrix jac = numerics::build_csr(jtrips, n_free, n_free);
      std::vector<double> neg_f(fres);
      for (double& v : neg_f) v = -v;
      numerics::CgResult delta = numerics::cg_solve(jac, neg_f, cg);

      usave = u;
      double s = 1.0;
      while (true) {
        u = usave;
        for (int i = 0; i < n; ++i) {
          int fi = free_index[i];
          if (fi >= 0) u[i] += s * delta.x[fi];
        }
        eval_residual(keff, ftrial);
        double ftn = inf_norm(ftrial);
        if (ftn < fnorm) {
          fres = ftrial;
          fnorm = ftn;
          if (trace) trace->residuals.back().push_back(fnorm);
          break;
        }
        if (s <= cfg.min_damping) {
          throw SolverError("pb fem: damped Newton stalled", fnorm);
        }
        s *= 0.5;
      }
    }
  }
  return u;
}

}  // namespace lnf::solvers
