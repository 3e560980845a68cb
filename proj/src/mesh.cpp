#include "lnf/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lnf {

int Mesh::n_boundary() const {
  int acc = 0;
  for (const auto& loop : boundary_loops) acc += static_cast<int>(loop.size());
  return acc;
}

std::vector<int> Mesh::boundary_nodes() const {
  std::vector<int> out;
  out.reserve(n_boundary());
  for (const auto& loop : boundary_loops) out.insert(out.end(), loop.begin(), loop.end());
  return out;
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const auto& a = nodes[tri[0]];
  const auto& b = nodes[tri[1]];
  const auto& c = nodes[tri[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

void Mesh::validate() const {
  if (nodes.empty() || triangles.empty()) throw MeshError("mesh is empty");
  for (int t = 0; t < n_triangles(); ++t) {
    for (int v : triangles[t]) {
      if (v < 0 || v >= n_nodes()) throw MeshError("triangle references unknown node");
    }
    if (triangle_area(t) < 1e-14) {
      throw MeshError("degenerate or negatively oriented triangle");
    }
  }
  // Edges used by exactly one triangle form the boundary.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      int u = tri[e], v = tri[(e + 1) % 3];
      edge_count[{std::min(u, v), std::max(u, v)}] += 1;
    }
  }
  std::set<std::pair<int, int>> boundary_edges;
  for (const auto& [edge, cnt] : edge_count) {
    if (cnt == 1) boundary_edges.insert(edge);
    if (cnt > 2) throw MeshError("non-manifold edge");
  }
  std::set<int> seen;
  size_t covered = 0;
  for (const auto& loop : boundary_loops) {
    if (loop.size() < 3) throw MeshError("boundary loop too short");
    for (size_t i = 0; i < loop.size(); ++i) {
      int u = loop[i], v = loop[(i + 1) % loop.size()];
      if (!seen.insert(u).second) throw MeshError("boundary node in more than one loop");
      if (!boundary_edges.count({std::min(u, v), std::max(u, v)})) {
        throw MeshError("boundary loop edge is not a boundary edge of the triangulation");
      }
      ++covered;
    }
  }
  if (covered != boundary_edges.size()) {
    throw MeshError("boundary loops do not cover the triangulation boundary");
  }
}

Mesh Mesh::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path.string());
  Mesh m;
  std::string tag;
  int count = 0;
  if (!(in >> tag >> count) || tag != "NODES" || count < 3) {
    throw FormatError("mesh file: expected NODES header");
  }
  m.nodes.resize(count);
  for (auto& p : m.nodes) {
    if (!(in >> p[0] >> p[1])) throw FormatError("mesh file: bad node line");
  }
  if (!(in >> tag >> count) || tag != "TRIS" || count < 1) {
    throw FormatError("mesh file: expected TRIS header");
  }
  m.triangles.resize(count);
  for (auto& t : m.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw FormatError("mesh file: bad triangle line");
  }
  if (!(in >> tag >> count) || tag != "BOUNDARY" || count < 3) {
    throw FormatError("mesh file: expected BOUNDARY header");
  }
  std::map<int, std::vector<int>> loops;
  for (int i = 0; i < count; ++i) {
    int loop_id, node;
    if (!(in >> loop_id >> node)) throw FormatError("mesh file: bad boundary line");
    loops[loop_id].push_back(node);
  }
  for (auto& [id, loop] : loops) m.boundary_loops.push_back(std::move(loop));
  m.validate();
  return m;
}

void Mesh::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file: " + path.string());
  out << "NODES " << n_nodes() << "\n";
  char buf[64];
  for (const auto& p : nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p[0], p[1]);
    out << buf;
  }
  out << "TRIS " << n_triangles() << "\n";
  for (const auto& t : triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "BOUNDARY " << n_boundary() << "\n";
  for (size_t l = 0; l < boundary_loops.size(); ++l) {
    for (int node : boundary_loops[l]) out << l << " " << node << "\n";
  }
  if (!out) throw IoError("mesh write failed: " + path.string());
}

Mesh Mesh::structured_unit_square(int n) {
  if (n < 2) throw MeshError("structured mesh needs n >= 2");
  Mesh m;
  double h = 1.0 / (n - 1);
  m.nodes.resize(size_t(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) m.nodes[size_t(y) * n + x] = {x * h, y * h};
  }
  auto id = [n](int x, int y) { return y * n + x; };
  for (int y = 0; y + 1 < n; ++y) {
    for (int x = 0; x + 1 < n; ++x) {
      m.triangles.push_back({id(x, y), id(x + 1, y), id(x + 1, y + 1)});
      m.triangles.push_back({id(x, y), id(x + 1, y + 1), id(x, y + 1)});
    }
  }
  std::vector<int> loop;
  for (int x = 0; x < n - 1; ++x) loop.push_back(id(x, 0));
  for (int y = 0; y < n - 1; ++y) loop.push_back(id(n - 1, y));
  for (int x = n - 1; x > 0; --x) loop.push_back(id(x, n - 1));
  for (int y = n - 1; y > 0; --y) loop.push_back(id(0, y));
  m.boundary_loops.push_back(std::move(loop));
  m.validate();
  return m;
}

}  // namespace lnf
