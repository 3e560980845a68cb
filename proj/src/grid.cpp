#include "lnf/grid.hpp"

namespace lnf {

int64_t Grid::n_nodes() const {
  int64_t total = 1;
  for (int d = 0; d < dim; ++d) total *= n;
  return total;
}

void Grid::node_coords(int64_t id, double* xyz) const {
  xyz[0] = double(id % n) * h;
  xyz[1] = double((id / n) % n) * h;
  if (dim == 3) xyz[2] = double(id / (int64_t(n) * n)) * h;
}

Grid Grid::make(int dim, int n) {
  if (dim != 2 && dim != 3) throw DimensionError("grid dim must be 2 or 3");
  if (n < 3) throw DimensionError("grid needs n >= 3");
  Grid g;
  g.dim = dim;
  g.n = n;
  g.h = 1.0 / (n - 1);
  int64_t total = g.n_nodes();
  g.interior_index_of.assign(total, -1);
  g.boundary_index_of.assign(total, -1);

  auto id2 = [n](int x, int y) { return int64_t(x) + int64_t(n) * y; };
  auto id3 = [n](int x, int y, int z) {
    return int64_t(x) + int64_t(n) * (int64_t(y) + int64_t(n) * z);
  };

  if (dim == 2) {
    // counterclockwise edge concatenation, each edge dropping its end corner
    for (int x = 0; x < n - 1; ++x) g.boundary_nodes.push_back(id2(x, 0));
    for (int y = 0; y < n - 1; ++y) g.boundary_nodes.push_back(id2(n - 1, y));
    for (int x = n - 1; x > 0; --x) g.boundary_nodes.push_back(id2(x, n - 1));
    for (int y = n - 1; y > 0; --y) g.boundary_nodes.push_back(id2(0, y));
    for (int y = 1; y < n - 1; ++y) {
      for (int x = 1; x < n - 1; ++x) g.interior_nodes.push_back(id2(x, y));
    }
  } else {
    auto emit = [&](int64_t id) {
      if (g.boundary_index_of[id] < 0) {
        g.boundary_index_of[id] = static_cast<int>(g.boundary_nodes.size());
        g.boundary_nodes.push_back(id);
      }
    };
    for (int z : {0, n - 1}) {
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) emit(id3(x, y, z));
      }
    }
    for (int y : {0, n - 1}) {
      for (int z = 0; z < n; ++z) {
        for (int x = 0; x < n; ++x) emit(id3(x, y, z));
      }
    }
    for (int x : {0, n - 1}) {
      for (int z = 0; z < n; ++z) {
        for (int y = 0; y < n; ++y) emit(id3(x, y, z));
      }
    }
    for (int z = 1; z < n - 1; ++z) {
      for (int y = 1; y < n - 1; ++y) {
        for (int x = 1; x < n - 1; ++x) g.interior_nodes.push_back(id3(x, y, z));
      }
    }
  }

  for (size_t i = 0; i < g.interior_nodes.size(); ++i) {
    g.interior_index_of[g.interior_nodes[i]] = static_cast<int>(i);
  }
  if (dim == 2) {
    for (size_t i = 0; i < g.boundary_nodes.size(); ++i) {
      g.boundary_index_of[g.boundary_nodes[i]] = static_cast<int>(i);
    }
  }
  return g;
}

std::vector<double> LaplacianSystem::rhs(std::span<const double> g,
                                         std::span<const double> f) const {
  std::vector<double> b(a.n_rows, 0.0);
  if (!f.empty()) {
    if (static_cast<int>(f.size()) != a.n_rows) {
      throw DimensionError("laplacian rhs: f size mismatch");
    }
    std::copy(f.begin(), f.end(), b.begin());
  }
  for (auto [row, bidx] : bc_pairs) {
    if (bidx < 0 || bidx >= static_cast<int>(g.size())) {
      throw DimensionError("laplacian rhs: boundary vector too short");
    }
    b[row] += bc_coeff * g[bidx];
  }
  return b;
}

LaplacianSystem assemble_laplacian(const Grid& grid) {
  LaplacianSystem sys;
  int n = grid.n;
  double inv_h2 = 1.0 / (grid.h * grid.h);
  sys.bc_coeff = inv_h2;
  int n_int = grid.n_interior();
  std::vector<numerics::Triplet> trips;
  trips.reserve(size_t(n_int) * (2 * grid.dim + 1));

  int64_t stride[3] = {1, n, int64_t(n) * n};
  for (int row = 0; row < n_int; ++row) {
    int64_t id = grid.interior_nodes[row];
    trips.push_back({row, row, 2.0 * grid.dim * inv_h2});
    for (int d = 0; d < grid.dim; ++d) {
      for (int dir : {-1, +1}) {
        int64_t nb = id + dir * stride[d];
        int irow = grid.interior_index_of[nb];
        if (irow >= 0) {
          trips.push_back({row, irow, -inv_h2});
        } else {
          int bidx = grid.boundary_index_of[nb];
          if (bidx < 0) throw ContractError("laplacian: neighbor is neither interior nor boundary");
          sys.bc_pairs.emplace_back(row, bidx);
        }
      }
    }
  }
  sys.a = numerics::build_csr(trips, n_int, n_int);
  return sys;
}

}  // namespace lnf
