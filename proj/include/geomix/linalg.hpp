#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>

namespace geomix {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned box [x_lo, x_hi] x [y_lo, y_hi].
struct Box {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  double extent(int axis) const { return axis == 0 ? width() : height(); }
  double lo(int axis) const { return axis == 0 ? x_lo : y_lo; }
  double hi(int axis) const { return axis == 0 ? x_hi : y_hi; }
  bool valid() const { return width() > 0.0 && height() > 0.0; }
};

/// Flip `v` so that its first nonzero component is positive.
inline Vec2 canonical_sign(Vec2 v) {
  const double tiny = 1e-300;
  if (std::abs(v.x()) > tiny) {
    if (v.x() < 0) v = -v;
  } else if (v.y() < 0) {
    v = -v;
  }
  return v;
}

/// Eigen-decomposition of a symmetric 2x2 matrix.
struct SymEigen2 {
  double mu_min;
  double mu_max;
  Vec2 v_min;  // unit, canonical sign
  Vec2 v_max;  // unit, canonical sign
};

/// Closed-form symmetric 2x2 eigensolver. Passing an accurately computed
/// determinant lets the small eigenvalue be recovered as det / mu_max,
/// which avoids cancellation for badly conditioned matrices.
inline SymEigen2 sym_eigen2(const Mat2& m, std::optional<double> det = std::nullopt) {
  const double a = m(0, 0);
  const double d = m(1, 1);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double half_tr = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double disc = std::hypot(half_diff, b);
  SymEigen2 e{};
  e.mu_max = half_tr + disc;
  const double dt = det ? *det : a * d - b * b;
  if (half_tr > 0.0 && e.mu_max > 0.0 && (det || dt > 0.0)) {
    e.mu_min = dt / e.mu_max;
  } else {
    e.mu_min = half_tr - disc;
  }
  // Eigenvector for mu_max: pick the better-conditioned of the two row forms.
  Vec2 v1(b, e.mu_max - a);
  Vec2 v2(e.mu_max - d, b);
  Vec2 v = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
  const double n = v.norm();
  if (n <= 1e-300 || disc <= 1e-15 * std::abs(half_tr)) {
    v = Vec2(1.0, 0.0);
  } else {
    v /= n;
  }
  e.v_max = canonical_sign(v);
  e.v_min = canonical_sign(Vec2(-v.y(), v.x()));
  return e;
}

inline Mat2 symmetrize(const Mat2& m) { return 0.5 * (m + m.transpose()); }

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace geomix
