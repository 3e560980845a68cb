#pragma once

#include <cstdint>
#include <vector>

#include "lnf/error.hpp"
#include "lnf/numerics.hpp"

namespace lnf {

// Uniform tensor-product grid on [0,1]^dim with nodes at i/(n-1). Node ids
// are lexicographic: id = x + n*(y + n*z) (z term absent in 2-D). Boundary
// ordering is fixed:
//   2-D: the four edges concatenated counterclockwise starting at (0,0),
//        each edge excluding its end corner -> 4(n-1) nodes.
//   3-D: faces z=0, z=1, y=0, y=1, x=0, x=1 scanned lexicographically,
//        emitting each node once -> 6n^2 - 12n + 8 nodes.
struct Grid {
  int dim = 2;
  int n = 0;
  double h = 0.0;
  std::vector<int64_t> boundary_nodes;  // ordered per the convention above
  std::vector<int64_t> interior_nodes;  // lexicographic
  std::vector<int> interior_index_of;   // node id -> interior idx or -1
  std::vector<int> boundary_index_of;   // node id -> boundary idx or -1

  static Grid make(int dim, int n);

  int64_t n_nodes() const;
  int n_interior() const { return static_cast<int>(interior_nodes.size()); }
  int n_boundary() const { return static_cast<int>(boundary_nodes.size()); }
  void node_coords(int64_t id, double* xyz) const;
};

// Interior-node operator for -Laplace with Dirichlet elimination. Boundary
// couplings are returned separately: rhs_i += bc_coeff * g[b] for each
// (interior row i, boundary index b) pair.
struct LaplacianSystem {
  numerics::CsrMatrix a;
  double bc_coeff = 0.0;  // 1/h^2
  std::vector<std::pair<int, int>> bc_pairs;

  // rhs = f + boundary coupling; f may be empty (treated as zero).
  std::vector<double> rhs(std::span<const double> g,
                          std::span<const double> f = {}) const;
};

LaplacianSystem assemble_laplacian(const Grid& grid);

}  // namespace lnf
