#pragma once

#include "geomix/error.hpp"
#include "geomix/linalg.hpp"

#include <array>
#include <functional>
#include <numeric>
#include <vector>

namespace geomix {

/// Triangulation of the material domain.
///
/// Vertices on opposite sides of a periodic axis are kept as separate
/// vertices and identified through `dof_of_vertex`; assembly happens on the
/// degrees of freedom.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<std::array<int, 2>> periodic_pairs;  // (image vertex, source vertex)
  std::vector<int> dof_of_vertex;
  int num_dofs = 0;

  double triangle_area(int t) const {
    const auto& tri = triangles[t];
    return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
  }
};

/// Structured mesh on an nx-by-ny vertex grid: every cell is split along its
/// (i, j)-(i+1, j+1) diagonal. Vertex j * nx + i sits at grid node (i, j),
/// matching MaterialGrid ordering.
inline TriMesh build_mesh(const Box& domain, int nx, int ny,
                          std::array<bool, 2> periodic = {false, false}) {
  if (nx < 2 || ny < 2) throw Error("build_mesh: need nx, ny >= 2");
  if (!domain.valid()) throw Error("build_mesh: degenerate domain");
  if ((periodic[0] && nx < 3) || (periodic[1] && ny < 3)) {
    throw Error("build_mesh: a periodic axis needs at least 3 vertices");
  }
  TriMesh m;
  const double dx = domain.width() / (nx - 1);
  const double dy = domain.height() / (ny - 1);
  auto id = [nx](int i, int j) { return j * nx + i; };
  m.vertices.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) m.vertices.emplace_back(domain.x_lo + i * dx, domain.y_lo + j * dy);
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  if (!periodic[1]) {
    for (int i = 0; i + 1 < nx; ++i) {
      m.boundary_edges.push_back({id(i, 0), id(i + 1, 0)});
      m.boundary_edges.push_back({id(i + 1, ny - 1), id(i, ny - 1)});
    }
  }
  if (!periodic[0]) {
    for (int j = 0; j + 1 < ny; ++j) {
      m.boundary_edges.push_back({id(nx - 1, j), id(nx - 1, j + 1)});
      m.boundary_edges.push_back({id(0, j + 1), id(0, j)});
    }
  }
  // Identify the far column/row with the near one.
  std::vector<int> source(m.vertices.size());
  std::iota(source.begin(), source.end(), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int si = (periodic[0] && i == nx - 1) ? 0 : i;
      int sj = (periodic[1] && j == ny - 1) ? 0 : j;
      if (si != i || sj != j) {
        source[id(i, j)] = id(si, sj);
        m.periodic_pairs.push_back({id(i, j), id(si, sj)});
      }
    }
  }
  m.dof_of_vertex.assign(m.vertices.size(), -1);
  int next = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (source[v] == static_cast<int>(v)) m.dof_of_vertex[v] = next++;
  }
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (source[v] != static_cast<int>(v)) m.dof_of_vertex[v] = m.dof_of_vertex[source[v]];
  }
  m.num_dofs = next;
  return m;
}

/// Apply a rigid motion x -> R x + shift to every vertex.
inline TriMesh transformed(TriMesh m, const Mat2& r, const Vec2& shift) {
  for (auto& v : m.vertices) v = r * v + shift;
  return m;
}

/// Disjoint union of two meshes (used to build disconnected domains).
inline TriMesh disjoint_union(const TriMesh& a, const TriMesh& b) {
  TriMesh m = a;
  const int off_v = static_cast<int>(a.vertices.size());
  m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto t : b.triangles) m.triangles.push_back({t[0] + off_v, t[1] + off_v, t[2] + off_v});
  for (auto e : b.boundary_edges) m.boundary_edges.push_back({e[0] + off_v, e[1] + off_v});
  for (auto p : b.periodic_pairs) m.periodic_pairs.push_back({p[0] + off_v, p[1] + off_v});
  for (int d : b.dof_of_vertex) m.dof_of_vertex.push_back(d + a.num_dofs);
  m.num_dofs = a.num_dofs + b.num_dofs;
  return m;
}

/// Scatter per-dof values back to every vertex.
inline std::vector<double> dofs_to_vertices(const TriMesh& m, const Eigen::VectorXd& dof_values) {
  std::vector<double> out(m.vertices.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = dof_values[m.dof_of_vertex[v]];
  return out;
}

/// Gather per-vertex values to dofs (the first vertex of each dof wins).
inline Eigen::VectorXd vertices_to_dofs(const TriMesh& m, const std::vector<double>& values) {
  Eigen::VectorXd out(m.num_dofs);
  std::vector<bool> seen(m.num_dofs, false);
  for (std::size_t v = 0; v < values.size(); ++v) {
    const int d = m.dof_of_vertex[v];
    if (!seen[d]) {
      out[d] = values[v];
      seen[d] = true;
    }
  }
  return out;
}

/// Connected components (over triangle edges) of the dofs for which
/// `member` is true. Returns a component id per dof, -1 for non-members.
inline std::vector<int> dof_components(const TriMesh& m, const std::function<bool(int)>& member,
                                       int* count = nullptr) {
  std::vector<int> parent(m.num_dofs);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : m.triangles) {
    for (int a = 0; a < 3; ++a) {
      const int p = m.dof_of_vertex[t[a]], q = m.dof_of_vertex[t[(a + 1) % 3]];
      if (member(p) && member(q)) parent[find(p)] = find(q);
    }
  }
  std::vector<int> comp(m.num_dofs, -1), label(m.num_dofs, -1);
  int n = 0;
  for (int d = 0; d < m.num_dofs; ++d) {
    if (!member(d)) continue;
    const int r = find(d);
    if (label[r] < 0) label[r] = n++;
    comp[d] = label[r];
  }
  if (count) *count = n;
  return comp;
}

}  // namespace geomix
