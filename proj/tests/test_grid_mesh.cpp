#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "lnf/grid.hpp"
#include "lnf/mesh.hpp"

using namespace lnf;

TEST_CASE("grid: boundary counts and index bijections") {
  Grid g2 = Grid::make(2, 11);
  CHECK(g2.n_boundary() == 4 * 10);
  CHECK(g2.n_interior() == 9 * 9);
  Grid g3 = Grid::make(3, 9);
  CHECK(g3.n_boundary() == 6 * 81 - 12 * 9 + 8);
  CHECK(g3.n_boundary() == 9 * 9 * 9 - 7 * 7 * 7);

  for (const Grid& g : {g2, g3}) {
    std::set<int64_t> seen;
    for (int64_t id : g.boundary_nodes) CHECK(seen.insert(id).second);
    for (int64_t id : g.interior_nodes) CHECK(seen.insert(id).second);
    CHECK(static_cast<int64_t>(seen.size()) == g.n_nodes());
  }
  CHECK_THROWS_AS(Grid::make(2, 2), DimensionError);
  CHECK_THROWS_AS(Grid::make(4, 5), DimensionError);
}

TEST_CASE("grid: 2-D boundary is the counterclockwise edge concatenation") {
  Grid g = Grid::make(2, 4);
  // bottom row, right column, top row reversed, left column reversed
  std::vector<std::pair<int, int>> want = {
      {0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2},
      {3, 3}, {2, 3}, {1, 3}, {0, 3}, {0, 2}, {0, 1},
  };
  REQUIRE(g.boundary_nodes.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(g.boundary_nodes[i] == want[i].first + 4 * want[i].second);
  }
}

TEST_CASE("assemble_laplacian: single interior node, symmetry") {
  Grid g = Grid::make(2, 3);
  LaplacianSystem sys = assemble_laplacian(g);
  REQUIRE(sys.a.n_rows == 1);
  CHECK(sys.a.values[0] == doctest::Approx(4.0 / (g.h * g.h)));
  CHECK(sys.bc_pairs.size() == 4);

  Grid g3 = Grid::make(3, 3);
  LaplacianSystem sys3 = assemble_laplacian(g3);
  REQUIRE(sys3.a.n_rows == 1);
  CHECK(sys3.a.values[0] == doctest::Approx(6.0 / (g3.h * g3.h)));

  // symmetry: ||A - A^T|| == 0
  Grid gb = Grid::make(2, 9);
  LaplacianSystem s = assemble_laplacian(gb);
  for (int r = 0; r < s.a.n_rows; ++r) {
    for (int64_t p = s.a.row_ptr[r]; p < s.a.row_ptr[r + 1]; ++p) {
      int c = s.a.col_idx[p];
      double v = s.a.values[p];
      bool found = false;
      for (int64_t q = s.a.row_ptr[c]; q < s.a.row_ptr[c + 1]; ++q) {
        if (s.a.col_idx[q] == r) {
          CHECK(s.a.values[q] == v);
          found = true;
        }
      }
      CHECK(found);
    }
  }
}

namespace {

// residual of the interior operator against an analytic -lap u
double laplacian_residual(int n, double (*u)(double, double),
                          double (*neg_lap)(double, double)) {
  Grid g = Grid::make(2, n);
  LaplacianSystem sys = assemble_laplacian(g);
  std::vector<double> ui(g.n_interior()), gb(g.n_boundary());
  for (int i = 0; i < g.n_interior(); ++i) {
    double xy[3];
    g.node_coords(g.interior_nodes[i], xy);
    ui[i] = u(xy[0], xy[1]);
  }
  for (int b = 0; b < g.n_boundary(); ++b) {
    double xy[3];
    g.node_coords(g.boundary_nodes[b], xy);
    gb[b] = u(xy[0], xy[1]);
  }
  std::vector<double> au = sys.a.apply(ui);
  std::vector<double> rhs = sys.rhs(gb);
  double worst = 0.0;
  for (int i = 0; i < g.n_interior(); ++i) {
    double xy[3];
    g.node_coords(g.interior_nodes[i], xy);
    worst = std::max(worst, std::abs(au[i] - rhs[i] - neg_lap(xy[0], xy[1])));
  }
  return worst;
}

}  // namespace

TEST_CASE("assemble_laplacian: exact on per-axis quadratics, O(h^2) otherwise") {
  // u = x(1-x)y(1-y) has vanishing 4th derivatives: the 5-point stencil is exact
  double exact = laplacian_residual(
      17, [](double x, double y) { return x * (1 - x) * y * (1 - y); },
      [](double x, double y) { return 2 * y * (1 - y) + 2 * x * (1 - x); });
  CHECK(exact < 1e-10);

  // sin(pi x) sin(pi y) shows the genuine O(h^2) truncation decay
  auto su = [](double x, double y) {
    return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  };
  auto slap = [](double x, double y) {
    return 2.0 * std::numbers::pi * std::numbers::pi *
           std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  };
  double coarse = laplacian_residual(17, su, slap);
  double fine = laplacian_residual(33, su, slap);
  double ratio = coarse / fine;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("mesh: structured square, save/load round trip") {
  Mesh m = Mesh::structured_unit_square(5);
  CHECK(m.n_nodes() == 25);
  CHECK(m.n_triangles() == 32);
  CHECK(m.n_boundary() == 16);
  m.validate();

  auto path = std::filesystem::temp_directory_path() / "lnf_test_square.mesh";
  m.save(path);
  Mesh back = Mesh::load(path);
  CHECK(back.n_nodes() == m.n_nodes());
  CHECK(back.n_triangles() == m.n_triangles());
  CHECK(back.boundary_loops == m.boundary_loops);
  for (int i = 0; i < m.n_nodes(); ++i) {
    CHECK(back.nodes[i][0] == m.nodes[i][0]);
    CHECK(back.nodes[i][1] == m.nodes[i][1]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("mesh: validation failures") {
  Mesh m = Mesh::structured_unit_square(4);
  Mesh degenerate = m;
  degenerate.triangles[0] = {0, 1, 1};
  CHECK_THROWS_AS(degenerate.validate(), MeshError);

  Mesh flipped = m;
  std::swap(flipped.triangles[0][1], flipped.triangles[0][2]);
  CHECK_THROWS_AS(flipped.validate(), MeshError);

  Mesh missing_loop = m;
  missing_loop.boundary_loops[0].pop_back();
  CHECK_THROWS_AS(missing_loop.validate(), MeshError);
}

namespace {

// square annulus: structured square with one cell's triangle pair removed,
// leaving an inner boundary loop around the hole
Mesh square_with_hole() {
  int n = 5;
  Mesh full = Mesh::structured_unit_square(n);
  auto id = [n](int x, int y) { return y * n + x; };
  std::array<int, 3> drop1 = {id(2, 2), id(3, 2), id(3, 3)};
  std::array<int, 3> drop2 = {id(2, 2), id(3, 3), id(2, 3)};
  Mesh m;
  m.nodes = full.nodes;
  for (const auto& t : full.triangles) {
    if (t != drop1 && t != drop2) m.triangles.push_back(t);
  }
  m.boundary_loops.push_back(full.boundary_loops[0]);
  m.boundary_loops.push_back({id(2, 2), id(3, 2), id(3, 3), id(2, 3)});
  return m;
}

}  // namespace

TEST_CASE("mesh: multiple boundary loops (ingested, not generated)") {
  Mesh m = square_with_hole();
  m.validate();
  CHECK(m.boundary_loops.size() == 2);
  auto path = std::filesystem::temp_directory_path() / "lnf_test_hole.mesh";
  m.save(path);
  Mesh back = Mesh::load(path);
  CHECK(back.boundary_loops.size() == 2);
  std::filesystem::remove(path);
}
