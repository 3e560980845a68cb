#include <cmath>

#include "lnf/solvers.hpp"

namespace lnf::solvers {

std::vector<double> darcy_solve(std::span<const double> a, int n) {
  if (static_cast<int64_t>(a.size()) != int64_t(n) * n) {
    throw DimensionError("darcy: coefficient grid size mismatch");
  }
  for (double v : a) {
    if (!(v > 0.0)) throw ContractError("darcy: coefficient must be positive everywhere");
  }
  Grid grid = Grid::make(2, n);
  int n_int = grid.n_interior();
  double inv_h2 = 1.0 / (grid.h * grid.h);
  int64_t stride[2] = {1, n};

  // face-averaged coefficients: a_{i+1/2} = (a_i + a_{i+1}) / 2; homogeneous
  // Dirichlet means boundary neighbors contribute nothing to the rhs
  std::vector<numerics::Triplet> trips;
  trips.reserve(size_t(n_int) * 5);
  for (int row = 0; row < n_int; ++row) {
    int64_t id = grid.interior_nodes[row];
    double diag = 0.0;
    for (int d = 0; d < 2; ++d) {
      for (int dir : {-1, +1}) {
        int64_t nb = id + dir * stride[d];
        double face = 0.5 * (a[id] + a[nb]) * inv_h2;
        diag += face;
        int irow = grid.interior_index_of[nb];
        if (irow >= 0) trips.push_back({row, irow, -face});
      }
    }
    trips.push_back({row, row, diag});
  }
  numerics::CsrMatrix m = numerics::build_csr(trips, n_int, n_int);
  std::vector<double> rhs(n_int, 1.0);
  numerics::CgResult sol = numerics::cg_solve(m, rhs, {1e-10, 0, true});

  std::vector<double> u(grid.n_nodes(), 0.0);
  for (int i = 0; i < n_int; ++i) u[grid.interior_nodes[i]] = sol.x[i];
  return u;
}

}  // namespace lnf::solvers
