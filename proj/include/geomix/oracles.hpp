#pragma once

#include "geomix/error.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace geomix {

/// Max discrepancy between the two sides of the 1D operator identity
///
///   f''(1 + phi'^-2) - f' phi'' phi'^-3  ==  h^{-1/2} (h^{-1/2} f')',
///   h = (1 + phi'^-2)^{-1},
///
/// i.e. Laplacian plus pullback Laplacian against the Laplace-Beltrami
/// operator of the summed inverse metric, on [0, 1] sampled at n + 1 nodes.
/// The left side uses central differences at the nodes, the right side a
/// flux form with half-node coefficients. Both are second order, so the
/// result decays like n^-2.
inline double oracle_1d_identity(std::span<const double> phi, std::span<const double> f) {
  const std::size_t np = phi.size();
  if (np < 5 || f.size() != np) throw Error("oracle_1d_identity: need matching samples, n >= 4");
  for (std::size_t i = 1; i < np; ++i) {
    if (!(phi[i] > phi[i - 1])) throw Error("oracle_1d_identity: phi is not strictly increasing");
  }
  const double dx = 1.0 / static_cast<double>(np - 1);
  auto weight = [](double dphi) { return 1.0 / (1.0 + 1.0 / (dphi * dphi)); };
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < np; ++i) {
    const double d1 = (phi[i + 1] - phi[i - 1]) / (2 * dx);
    const double d2 = (phi[i + 1] - 2 * phi[i] + phi[i - 1]) / (dx * dx);
    const double f1 = (f[i + 1] - f[i - 1]) / (2 * dx);
    const double f2 = (f[i + 1] - 2 * f[i] + f[i - 1]) / (dx * dx);
    const double lhs = f2 * (1 + 1 / (d1 * d1)) - f1 * d2 / (d1 * d1 * d1);

    const double h_r = weight((phi[i + 1] - phi[i]) / dx);
    const double h_l = weight((phi[i] - phi[i - 1]) / dx);
    const double q_r = (f[i + 1] - f[i]) / dx / std::sqrt(h_r);
    const double q_l = (f[i] - f[i - 1]) / dx / std::sqrt(h_l);
    const double rhs = (q_r - q_l) / dx / std::sqrt(weight(d1));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Convenience overload sampling phi and f at n + 1 equidistant nodes.
inline double oracle_1d_identity(const std::function<double(double)>& phi,
                                 const std::function<double(double)>& f, int n) {
  std::vector<double> p(n + 1), v(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    p[i] = phi(x);
    v[i] = f(x);
  }
  return oracle_1d_identity(p, v);
}

namespace detail {

/// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre01(int q, std::vector<double>& x, std::vector<double>& w) {
  x.assign(q, 0.0);
  w.assign(q, 0.0);
  for (int i = 0; i < q; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1 - z);
    w[i] = 1.0 / ((1 - z * z) * dp * dp);
  }
}

/// Degree-7 periodic Lagrange interpolation of grid samples at (px, py).
inline double torus_interpolate(std::span<const double> u, int n, double px, double py) {
  constexpr int kPts = 8;
  auto weights = [n](double p, int& base, std::array<double, kPts>& wt) {
    const double s = p * n;
    const int i0 = static_cast<int>(std::floor(s));
    const double t = s - i0;  // in [0, 1)
    base = i0 - kPts / 2 + 1;
    for (int a = 0; a < kPts; ++a) {
      const double xa = a - (kPts / 2 - 1);
      double l = 1.0;
      for (int b = 0; b < kPts; ++b) {
        if (b == a) continue;
        const double xb = b - (kPts / 2 - 1);
        l *= (t - xb) / (xa - xb);
      }
      wt[a] = l;
    }
  };
  int bx = 0, by = 0;
  std::array<double, kPts> wx{}, wy{};
  weights(px, bx, wx);
  weights(py, by, wy);
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  double acc = 0.0;
  for (int b = 0; b < kPts; ++b) {
    const int row = wrap(by + b) * n;
    double s = 0.0;
    for (int a = 0; a < kPts; ++a) s += wx[a] * u[row + wrap(bx + a)];
    acc += wy[b] * s;
  }
  return acc;
}

}  // namespace detail

/// Average of u over the Euclidean eps-ball around every node. Samples live
/// on the periodic n x n grid of the unit torus, node (i, j) at (i/n, j/n),
/// row-major.
inline std::vector<double> ball_average(std::span<const double> u, int n, double eps) {
  if (static_cast<int>(u.size()) != n * n) throw Error("ball_average: sample count != n*n");
  std::vector<double> rx, rw;
  detail::gauss_legendre01(12, rx, rw);
  constexpr int kAngles = 40;
  std::vector<double> out(u.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
      double acc = 0.0;
      for (std::size_t a = 0; a < rx.size(); ++a) {
        const double r = eps * rx[a];
        double ring = 0.0;
        for (int b = 0; b < kAngles; ++b) {
          const double th = 2 * std::numbers::pi * b / kAngles;
          ring += detail::torus_interpolate(u, n, x + r * std::cos(th), y + r * std::sin(th));
        }
        // (1 / (pi eps^2)) * int_0^eps r dr * int dtheta
        acc += rw[a] * rx[a] * ring / kAngles;
      }
      out[j * n + i] = 2.0 * acc;
    }
  }
  return out;
}

/// Fourth-order periodic five-point-per-axis Laplacian.
inline std::vector<double> torus_laplacian(std::span<const double> u, int n) {
  const double h2 = 1.0 / (static_cast<double>(n) * n);
  auto at = [&](int i, int j) { return u[((j % n + n) % n) * n + ((i % n + n) % n)]; };
  std::vector<double> out(u.size());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double c = at(i, j);
      const double dxx =
          (-at(i + 2, j) + 16 * at(i + 1, j) - 30 * c + 16 * at(i - 1, j) - at(i - 2, j)) / 12;
      const double dyy =
          (-at(i, j + 2) + 16 * at(i, j + 1) - 30 * c + 16 * at(i, j - 1) - at(i, j - 2)) / 12;
      out[j * n + i] = (dxx + dyy) / h2;
    }
  }
  return out;
}

/// max |T_eps u - u - eps^2/8 Delta u| on the flat 2-torus. The defect is
/// fourth order in eps for smooth u.
inline double ball_average_expansion(std::span<const double> u, int n, double eps) {
  if (!(eps > 3.0 / n)) throw Error("ball_average_expansion: eps must exceed 3 grid spacings");
  if (!(eps < 0.5)) throw Error("ball_average_expansion: eps must be below half the period");
  const std::vector<double> t = ball_average(u, n, eps);
  const std::vector<double> lap = torus_laplacian(u, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    worst = std::max(worst, std::abs(t[i] - u[i] - eps * eps / 8.0 * lap[i]));
  }
  return worst;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope: need >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace geomix
