#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lnf/error.hpp"

namespace lnf {

// Planar triangle mesh for the node-based FEM benchmarks. Triangles are
// positively oriented; boundary nodes are grouped into closed loops, each
// node appearing in exactly one loop. Boundary values are supplied per node
// in loop-concatenation order.
struct Mesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::vector<int>> boundary_loops;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_boundary() const;
  std::vector<int> boundary_nodes() const;  // loops concatenated

  double triangle_area(int t) const;

  // Checks orientation/area, loop closure against the triangulation's
  // boundary edges, and single-loop membership. Throws MeshError.
  void validate() const;

  // Text format:
  //   NODES n      followed by n lines "x y"
  //   TRIS m       followed by m lines "i j k" (0-based)
  //   BOUNDARY k   followed by k lines "loop_id node_index" in traversal order
  static Mesh load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Right-triangle subdivision of the unit square, n nodes per side.
  static Mesh structured_unit_square(int n);
};

}  // namespace lnf
