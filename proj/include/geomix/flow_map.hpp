#pragma once

#include "geomix/error.hpp"
#include "geomix/flow_models.hpp"
#include "geomix/linalg.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace geomix {

/// Uniform grid of material points. Nodes are stored row-major: node
/// j * nx + i sits at (x_lo + i dx, y_lo + j dy). On a periodic axis the last
/// column (row) duplicates the first one shifted by the period.
struct MaterialGrid {
  int nx = 0;
  int ny = 0;
  Box bounds;
  std::array<bool, 2> periodic{false, false};
  std::vector<Vec2> nodes;

  static MaterialGrid uniform(const Box& bounds, int nx, int ny,
                              std::array<bool, 2> periodic = {false, false}) {
    if (nx < 2 || ny < 2) throw Error("material grid: need nx, ny >= 2");
    if (!bounds.valid()) throw Error("material grid: degenerate bounds");
    MaterialGrid g;
    g.nx = nx;
    g.ny = ny;
    g.bounds = bounds;
    g.periodic = periodic;
    g.nodes.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        g.nodes.emplace_back(bounds.x_lo + i * g.dx(), bounds.y_lo + j * g.dy());
      }
    }
    return g;
  }

  double dx() const { return bounds.width() / (nx - 1); }
  double dy() const { return bounds.height() / (ny - 1); }
  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
};

/// Step-size control for trajectory integration. The default is a fixed-step
/// classical Runge-Kutta scheme with steps no longer than `max_step`; the
/// adaptive Dormand-Prince 5(4) pair is opt-in.
struct StepControl {
  double max_step = 1e-2;
  bool adaptive = false;
  double rtol = 1e-9;
  double atol = 1e-11;
  double min_step = 1e-12;
};

/// Positions and linearized flow maps per node per sampled instant.
///
/// The inverse Jacobians and determinants are accumulated from the
/// per-interval factors; strongly stretched nodes have Jacobian entries far
/// beyond 1e6, where the adjugate formula loses every digit of det.
struct FlowMapSample {
  std::vector<double> times;
  int num_nodes = 0;
  std::vector<Vec2> positions;          // [node * times.size() + k], wrapped
  std::vector<Mat2> jacobians;          // same layout
  std::vector<Mat2> inverse_jacobians;  // same layout, may be empty
  std::vector<double> jacobian_dets;    // same layout, may be empty

  int num_times() const { return static_cast<int>(times.size()); }
  std::size_t slot(int node, int k) const { return static_cast<std::size_t>(node) * times.size() + k; }
  const Vec2& position(int node, int k) const { return positions[slot(node, k)]; }
  const Mat2& jacobian(int node, int k) const { return jacobians[slot(node, k)]; }
  bool has_inverses() const { return inverse_jacobians.size() == jacobians.size(); }
};

namespace detail {

inline void check_inside(const FlowModel& model, const Vec2& x, double t) {
  if (model.defined_outside) return;
  if (!inside_open_axes(model, wrap_periodic(model, x), 1e-2)) {
    throw TrajectoryExit("trajectory left the domain of model '" + model.name +
                             "' at t = " + std::to_string(t),
                         t);
  }
}

inline Vec2 rk4_step(const FlowModel& m, double t, const Vec2& x, double h) {
  const Vec2 k1 = velocity(m, t, x);
  const Vec2 k2 = velocity(m, t + 0.5 * h, x + 0.5 * h * k1);
  const Vec2 k3 = velocity(m, t + 0.5 * h, x + 0.5 * h * k2);
  const Vec2 k4 = velocity(m, t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Vec2 advance_fixed(const FlowModel& m, Vec2 x, double t0, double t1,
                          const StepControl& ctrl) {
  const double span = t1 - t0;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / ctrl.max_step - 1e-9)));
  const double h = span / n;
  for (int s = 0; s < n; ++s) {
    const double t = t0 + s * h;
    x = rk4_step(m, t, x, h);
    check_inside(m, x, t + h);
  }
  return x;
}

inline Vec2 advance_adaptive(const FlowModel& m, Vec2 x, double t0, double t1,
                             const StepControl& ctrl) {
  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::min(ctrl.max_step, std::abs(t1 - t0));
  if (h == 0.0) return x;
  while (dir * (t1 - t) > 0.0) {
    if (dir * (t + h - t1) > 0.0) h = t1 - t;
    const Vec2 k1 = velocity(m, t, x);
    const Vec2 k2 = velocity(m, t + c2 * h, x + h * (a21 * k1));
    const Vec2 k3 = velocity(m, t + c3 * h, x + h * (a31 * k1 + a32 * k2));
    const Vec2 k4 = velocity(m, t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec2 k5 =
        velocity(m, t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec2 k6 = velocity(
        m, t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec2 x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec2 k7 = velocity(m, t + h, x5);
    const Vec2 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double sc = ctrl.atol + ctrl.rtol * std::max(std::abs(x[a]), std::abs(x5[a]));
      en = std::max(en, std::abs(err[a]) / sc);
    }
    if (en <= 1.0) {
      t += h;
      x = x5;
      check_inside(m, x, t);
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h = dir * std::min(ctrl.max_step, std::abs(h) * factor);
    if (std::abs(h) < ctrl.min_step && dir * (t1 - t) > ctrl.min_step) {
      throw Error("step-size underflow at t = " + std::to_string(t));
    }
  }
  return x;
}

/// Advance an unwrapped trajectory from t0 to t1.
inline Vec2 advance_raw(const FlowModel& m, const Vec2& x, double t0, double t1,
                        const StepControl& ctrl) {
  if (t1 == t0) return x;
  return ctrl.adaptive ? advance_adaptive(m, x, t0, t1, ctrl) : advance_fixed(m, x, t0, t1, ctrl);
}

inline void check_span(const FlowModel& m, double t0, double t1) {
  const double tol = 1e-9 * std::max(1.0, std::abs(m.t1 - m.t0));
  if (t0 < m.t0 - tol || t1 > m.t1 + tol || t0 > t1) {
    throw Error("integration interval [" + std::to_string(t0) + ", " + std::to_string(t1) +
                "] not inside the time span of model '" + m.name + "'");
  }
}

/// Central-difference Jacobian from four unwrapped auxiliary endpoints
/// ordered (+x, -x, +y, -y).
inline Mat2 fd_jacobian(const std::array<Vec2, 4>& aux, double h) {
  Mat2 j;
  j.col(0) = (aux[0] - aux[1]) / (2.0 * h);
  j.col(1) = (aux[2] - aux[3]) / (2.0 * h);
  return j;
}

}  // namespace detail

/// Endpoint of the trajectory through x0 at t0, evaluated at t1.
inline Vec2 integrate_flow(const FlowModel& model, const Vec2& x0, double t0, double t1,
                           const StepControl& ctrl = {}) {
  detail::check_span(model, t0, t1);
  return wrap_periodic(model, detail::advance_raw(model, x0, t0, t1, ctrl));
}

/// Linearized flow map D Phi from t0 to t1 at x0 by central differences with
/// offset h.
inline Mat2 linearized_flow(const FlowModel& model, const Vec2& x0, double t0, double t1,
                            double h, const StepControl& ctrl = {}) {
  if (!(h > 0.0)) throw Error("linearized_flow: offset h must be positive");
  detail::check_span(model, t0, t1);
  if (t1 == t0) return Mat2::Identity();
  const std::array<Vec2, 4> seeds{x0 + Vec2(h, 0), x0 - Vec2(h, 0), x0 + Vec2(0, h),
                                  x0 - Vec2(0, h)};
  std::array<Vec2, 4> ends;
  for (int s = 0; s < 4; ++s) ends[s] = detail::advance_raw(model, seeds[s], t0, t1, ctrl);
  return detail::fd_jacobian(ends, h);
}

/// `n` equidistant instants from t0 to t1 inclusive.
inline std::vector<double> equidistant_times(double t0, double t1, int n) {
  if (n < 2) throw Error("need at least two time instants");
  std::vector<double> ts(n);
  for (int k = 0; k < n; ++k) ts[k] = t0 + (t1 - t0) * k / (n - 1);
  ts.back() = t1;
  return ts;
}

/// Trajectories and linearized flow maps of every grid node at every
/// requested instant. `h <= 0` selects the default offset min(dx, dy) / 100.
///
/// The auxiliary trajectories are reseeded at x(t_k) +- h e_i at every
/// instant and the interval Jacobians are chained,
/// DPhi(t_k) = DPhi(t_{k-1} -> t_k) DPhi(t_{k-1}), so the stencil never
/// spreads beyond the linear regime even where the total stretching is huge.
inline FlowMapSample sample_flow(const FlowModel& model, const MaterialGrid& grid,
                                 const std::vector<double>& times, const StepControl& ctrl = {},
                                 double h = 0.0) {
  if (times.empty()) throw Error("sample_flow: no time instants");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw Error("sample_flow: times must be increasing");
  }
  detail::check_span(model, times.front(), times.back());
  if (h <= 0.0) h = std::min(grid.dx(), grid.dy()) / 100.0;

  FlowMapSample out;
  out.times = times;
  out.num_nodes = grid.size();
  const std::size_t nt = times.size();
  const std::size_t total = grid.nodes.size() * nt;
  out.positions.resize(total);
  out.jacobians.resize(total);
  out.inverse_jacobians.resize(total);
  out.jacobian_dets.resize(total);

  std::vector<std::pair<int, std::string>> failures;
  for (int node = 0; node < grid.size(); ++node) {
    const Vec2 x0 = grid.nodes[node];
    Vec2 center = x0;
    Mat2 j = Mat2::Identity(), jinv = Mat2::Identity();
    double det = 1.0;
    try {
      for (std::size_t k = 0; k < nt; ++k) {
        if (k > 0) {
          std::array<Vec2, 4> aux{center + Vec2(h, 0), center - Vec2(h, 0), center + Vec2(0, h),
                                  center - Vec2(0, h)};
          for (auto& a : aux) a = detail::advance_raw(model, a, times[k - 1], times[k], ctrl);
          center = detail::advance_raw(model, center, times[k - 1], times[k], ctrl);
          const Mat2 step = detail::fd_jacobian(aux, h);
          const double sd = step.determinant();
          if (!(sd > 0.0)) {
            throw Error("non-positive Jacobian determinant on interval ending at t = " +
                        std::to_string(times[k]));
          }
          Mat2 step_inv;
          step_inv << step(1, 1), -step(0, 1), -step(1, 0), step(0, 0);
          j = step * j;
          jinv = jinv * (step_inv / sd);
          det *= sd;
        }
        const std::size_t at = out.slot(node, static_cast<int>(k));
        out.positions[at] = k == 0 ? x0 : wrap_periodic(model, center);
        out.jacobians[at] = j;
        out.inverse_jacobians[at] = jinv;
        out.jacobian_dets[at] = det;
      }
    } catch (const Error& e) {
      failures.emplace_back(node, e.what());
    }
  }
  if (!failures.empty()) throw NodeFailures(std::move(failures));
  return out;
}

}  // namespace geomix
