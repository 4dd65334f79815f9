#pragma once

#include "geomix/error.hpp"
#include "geomix/linalg.hpp"
#include "geomix/mesh.hpp"
#include "geomix/mixing_geometry.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace geomix {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Which operator the matrix pair discretizes.
///   dynamic_laplacian: averaged diffusion tensor, initial (Lebesgue) volume.
///   mixing_lb:         Laplace-Beltrami operator of the harmonic-mean
///                      metric, weighted by its own volume form.
enum class OperatorVariant { dynamic_laplacian, mixing_lb };

enum class MassKind { consistent, lumped };

inline const char* to_string(OperatorVariant v) {
  return v == OperatorVariant::dynamic_laplacian ? "dynamic_laplacian" : "mixing_lb";
}

inline OperatorVariant parse_variant(const std::string& s) {
  if (s == "dynamic_laplacian") return OperatorVariant::dynamic_laplacian;
  if (s == "mixing_lb") return OperatorVariant::mixing_lb;
  throw Error("unknown operator variant '" + s + "'");
}

/// Stiffness S (symmetric positive semidefinite) and mass M (symmetric
/// positive definite). The eigenproblem is S w = -lambda M w, lambda <= 0.
struct DiscreteOperatorPair {
  SparseMatrix stiffness;
  SparseMatrix mass;
  OperatorVariant variant = OperatorVariant::mixing_lb;

  int size() const { return static_cast<int>(stiffness.rows()); }
};

/// P1 element matrices of one triangle with a constant tensor `d` and a
/// constant weight `rho`.
struct ElementMatrices {
  Eigen::Matrix3d stiffness;
  Eigen::Matrix3d mass;
};

inline ElementMatrices p1_element(const std::array<Vec2, 3>& p, const Mat2& d, double rho) {
  const double area2 = cross(p[1] - p[0], p[2] - p[0]);
  if (!(area2 > 0.0)) throw Error("p1_element: degenerate or negatively oriented triangle");
  const double area = 0.5 * area2;
  // grad phi_a = perp(p_{a+2} - p_{a+1}) / (2 area), perp(x, y) = (-y, x) rotated in.
  Eigen::Matrix<double, 2, 3> grad;
  for (int a = 0; a < 3; ++a) {
    const Vec2 e = p[(a + 2) % 3] - p[(a + 1) % 3];
    grad.col(a) = Vec2(-e.y(), e.x()) / area2;
  }
  ElementMatrices em;
  em.stiffness = rho * area * grad.transpose() * d * grad;
  em.stiffness = 0.5 * (em.stiffness + em.stiffness.transpose()).eval();
  em.mass = Eigen::Matrix3d::Constant(rho * area / 12.0);
  em.mass.diagonal().setConstant(rho * area / 6.0);
  return em;
}

/// Assemble the matrix pair from per-vertex tensors (and, for mixing_lb,
/// per-vertex volume densities). Each triangle uses the vertex average of
/// its coefficients: D for dynamic_laplacian, rho D and rho for mixing_lb.
/// Averaging rho D rather than D keeps the stiffness coefficient bounded by
/// the square root of the anisotropy.
inline DiscreteOperatorPair assemble(const TriMesh& mesh, std::span<const Mat2> d_bar,
                                     std::span<const double> density, OperatorVariant variant,
                                     MassKind mass_kind = MassKind::consistent) {
  const std::size_t nv = mesh.vertices.size();
  if (d_bar.size() != nv) throw Error("assemble: tensor field size does not match mesh vertices");
  if (variant == OperatorVariant::mixing_lb && density.size() != nv) {
    throw Error("assemble: density field size does not match mesh vertices");
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const Mat2& m = d_bar[v];
    const bool spd = m(0, 0) > 0.0 && m(1, 1) > 0.0 &&
                     m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > -1e-14 * m(0, 0) * m(1, 1);
    const bool rho_ok = variant != OperatorVariant::mixing_lb || density[v] > 0.0;
    if (!spd || !rho_ok) throw Error("assemble: bad tensor or density at vertex " + std::to_string(v));
  }
  std::vector<Eigen::Triplet<double>> st, mt;
  st.reserve(mesh.triangles.size() * 9);
  mt.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    double rho = 1.0;
    Mat2 d = Mat2::Zero();
    if (variant == OperatorVariant::mixing_lb) {
      rho = (density[tri[0]] + density[tri[1]] + density[tri[2]]) / 3.0;
      for (int a = 0; a < 3; ++a) d += density[tri[a]] * d_bar[tri[a]];
      d /= 3.0 * rho;
    } else {
      d = (d_bar[tri[0]] + d_bar[tri[1]] + d_bar[tri[2]]) / 3.0;
    }
    d = symmetrize(d);
    if (!(rho > 0.0 && d(0, 0) > 0.0 && d(1, 1) > 0.0 &&
          d(0, 0) * d(1, 1) - d(0, 1) * d(0, 1) > -1e-14 * d(0, 0) * d(1, 1))) {
      throw Error("assemble: non-SPD element tensor in triangle " + std::to_string(t));
    }
    const ElementMatrices em =
        p1_element({mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]}, d, rho);
    for (int a = 0; a < 3; ++a) {
      const int ra = mesh.dof_of_vertex[tri[a]];
      for (int b = 0; b < 3; ++b) {
        const int cb = mesh.dof_of_vertex[tri[b]];
        st.emplace_back(ra, cb, em.stiffness(a, b));
        if (mass_kind == MassKind::consistent) {
          mt.emplace_back(ra, cb, em.mass(a, b));
        } else if (a == b) {
          mt.emplace_back(ra, ra, em.mass.row(a).sum());
        }
      }
    }
  }
  DiscreteOperatorPair pair;
  pair.variant = variant;
  pair.stiffness.resize(mesh.num_dofs, mesh.num_dofs);
  pair.mass.resize(mesh.num_dofs, mesh.num_dofs);
  pair.stiffness.setFromTriplets(st.begin(), st.end());
  pair.mass.setFromTriplets(mt.begin(), mt.end());
  pair.stiffness.makeCompressed();
  pair.mass.makeCompressed();
  return pair;
}

inline DiscreteOperatorPair assemble(const TriMesh& mesh, const MixingMetricField& field,
                                     OperatorVariant variant,
                                     MassKind mass_kind = MassKind::consistent) {
  const std::vector<double> rho = field.density();
  return assemble(mesh, std::span<const Mat2>(field.D_bar), std::span<const double>(rho), variant,
                  mass_kind);
}

/// -(w^T S w) / (w^T M w).
inline double rayleigh_quotient(const DiscreteOperatorPair& pair, const Eigen::VectorXd& w) {
  const double den = w.dot(pair.mass * w);
  if (w.size() != pair.size() || !(den > 0.0)) throw Error("rayleigh_quotient: zero vector");
  const double num = w.dot(pair.stiffness * w);
  const double q = num / den;
  return q <= 0.0 ? 0.0 : -q;
}

/// Coordinate text export: one "row col value" line per stored entry,
/// sorted row-major, values at 17 significant digits.
inline void write_coordinate(std::ostream& os, const SparseMatrix& m) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  char buf[96];
  for (const auto& [r, c, v] : entries) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, c, v);
    os << buf;
  }
}

}  // namespace geomix
