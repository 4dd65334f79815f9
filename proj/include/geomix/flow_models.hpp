#pragma once

#include "geomix/error.hpp"
#include "geomix/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace geomix {

using ParamMap = std::map<std::string, double>;

/// A time-dependent planar velocity field on a box, with optional periodic
/// identification per axis.
struct FlowModel {
  std::string name;
  Box domain;
  std::array<bool, 2> periodic{false, false};
  double t0 = 0.0;
  double t1 = 1.0;
  ParamMap params;
  /// Analytic fields are defined beyond the box; sampled fields are not.
  bool defined_outside = true;
  std::function<Vec2(double, const Vec2&)> field;

  double period(int axis) const { return domain.extent(axis); }
};

/// Wrap `x` into the fundamental domain along periodic axes.
inline Vec2 wrap_periodic(const FlowModel& model, Vec2 x) {
  for (int a = 0; a < 2; ++a) {
    if (!model.periodic[a]) continue;
    const double lo = model.domain.lo(a);
    const double p = model.period(a);
    double r = std::fmod(x[a] - lo, p);
    if (r < 0) r += p;
    if (r >= p) r -= p;
    x[a] = lo + r;
  }
  return x;
}

/// Whether `x` lies inside the model box along every non-periodic axis,
/// allowing a relative `slack` of the axis extent.
inline bool inside_open_axes(const FlowModel& model, const Vec2& x, double slack = 0.0) {
  for (int a = 0; a < 2; ++a) {
    if (model.periodic[a]) continue;
    const double s = slack * model.domain.extent(a);
    if (x[a] < model.domain.lo(a) - s || x[a] > model.domain.hi(a) + s) return false;
  }
  return true;
}

/// Evaluate the velocity at time t and point x.
///
/// Periodic axes are wrapped first. Models that are not defined outside
/// their box reject points beyond a non-periodic axis.
inline Vec2 velocity(const FlowModel& model, double t, const Vec2& x) {
  const double tol = 1e-9 * std::max(1.0, std::abs(model.t1 - model.t0));
  if (t < model.t0 - tol || t > model.t1 + tol) {
    throw Error("velocity: t = " + std::to_string(t) + " outside time span of model '" +
                model.name + "'");
  }
  const Vec2 xw = wrap_periodic(model, x);
  if (!model.defined_outside && !inside_open_axes(model, xw, 1e-2)) {
    throw Error("velocity: point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                ") outside non-periodic axis of model '" + model.name + "'");
  }
  return model.field(t, xw);
}

// ---------------------------------------------------------------------------
// Built-in models. Every factory takes a parameter map; missing keys fall
// back to the defaults returned by default_params().

inline double param(const ParamMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw Error("missing model parameter '" + key + "'");
  return it->second;
}

/// Smoothstep used by the rotating double gyre, s(t) = t^2 (3 - 2t).
inline double double_gyre_interpolation(double t) { return t * t * (3.0 - 2.0 * t); }

inline ParamMap default_params(const std::string& name) {
  using std::numbers::pi;
  if (name == "double_gyre") return {{"t0", 0.0}, {"t1", 1.0}};
  if (name == "cylinder") {
    return {{"c", 0.5},       {"nu", 0.5},  {"eps", 0.25},
            {"a_amp", 0.125}, {"a_freq", 2.0 * std::sqrt(5.0)},
            {"t0", 0.0},      {"t1", 40.0}};
  }
  if (name == "bickley") {
    // U0 in m/s, lengths in Mm; time_unit_s converts the model time unit to
    // seconds (one day by default).
    return {{"U0", 62.66},       {"L0", 1.770},      {"r0", 6.371},
            {"c1_ratio", 0.1446}, {"c2_ratio", 0.205}, {"c3_ratio", 0.461},
            {"eps1", 0.0075},     {"eps2", 0.15},      {"eps3", 0.3},
            {"time_unit_s", 86400.0}, {"y_half_width", 3.0},
            {"t0", 0.0},          {"t1", 40.0}};
  }
  if (name == "rigid_rotation" || name == "linear_shear") {
    return {{"omega", 1.0}, {"half_width", 2.0}, {"t0", 0.0}, {"t1", 100.0}};
  }
  if (name == "identity") return {{"t0", 0.0}, {"t1", 1.0}};
  throw Error("unknown model name '" + name + "'");
}

inline ParamMap merged_params(const std::string& name, const ParamMap& overrides) {
  ParamMap p = default_params(name);
  for (const auto& [k, v] : overrides) {
    if (!p.count(k)) throw Error("model '" + name + "' has no parameter '" + k + "'");
    p[k] = v;
  }
  return p;
}

inline FlowModel make_double_gyre(const ParamMap& overrides = {}) {
  using std::numbers::pi;
  FlowModel m;
  m.name = "double_gyre";
  m.params = merged_params(m.name, overrides);
  m.domain = Box{0.0, 1.0, 0.0, 1.0};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  m.field = [](double t, const Vec2& x) {
    const double s = double_gyre_interpolation(t);
    const double sx1 = std::sin(pi * x.x()), cx1 = std::cos(pi * x.x());
    const double sx2 = std::sin(2 * pi * x.x()), cx2 = std::cos(2 * pi * x.x());
    const double sy1 = std::sin(pi * x.y()), cy1 = std::cos(pi * x.y());
    const double sy2 = std::sin(2 * pi * x.y()), cy2 = std::cos(2 * pi * x.y());
    // Psi = (1-s) sin(2 pi x) sin(pi y) + s sin(pi x) sin(2 pi y)
    const double dpsi_dy = (1 - s) * sx2 * pi * cy1 + s * sx1 * 2 * pi * cy2;
    const double dpsi_dx = (1 - s) * 2 * pi * cx2 * sy1 + s * pi * cx1 * sy2;
    return Vec2(-dpsi_dy, dpsi_dx);
  };
  return m;
}

inline FlowModel make_cylinder(const ParamMap& overrides = {}) {
  using std::numbers::pi;
  FlowModel m;
  m.name = "cylinder";
  m.params = merged_params(m.name, overrides);
  m.domain = Box{0.0, 2 * pi, 0.0, pi};
  m.periodic = {true, false};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  const double c = param(m.params, "c"), nu = param(m.params, "nu");
  const double eps = param(m.params, "eps");
  const double a_amp = param(m.params, "a_amp"), a_freq = param(m.params, "a_freq");
  m.field = [=](double t, const Vec2& x) {
    const double amp = 1.0 + a_amp * std::sin(a_freq * t);
    const double phase = x.x() - nu * t;
    const double sp = std::sin(phase), cp = std::cos(phase);
    const double sy = std::sin(x.y()), cy = std::cos(x.y());
    const double g = sp * sy + x.y() / 2 - pi / 4;
    const double big_g = 1.0 / ((g * g + 1) * (g * g + 1));
    return Vec2(c - amp * sp * cy + eps * big_g * std::sin(t / 2), amp * cp * sy);
  };
  return m;
}

inline FlowModel make_bickley(const ParamMap& overrides = {}) {
  using std::numbers::pi;
  FlowModel m;
  m.name = "bickley";
  m.params = merged_params(m.name, overrides);
  const double r0 = param(m.params, "r0");
  const double half = param(m.params, "y_half_width");
  m.domain = Box{0.0, pi * r0, -half, half};
  m.periodic = {true, false};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  // Velocities in Mm per model time unit.
  const double u0 = param(m.params, "U0") * param(m.params, "time_unit_s") * 1e-6;
  const double l0 = param(m.params, "L0");
  std::array<double, 3> k{}, cn{}, en{};
  for (int n = 0; n < 3; ++n) {
    k[n] = 2.0 * (n + 1) / r0;
    cn[n] = param(m.params, "c" + std::to_string(n + 1) + "_ratio") * u0;
    en[n] = param(m.params, "eps" + std::to_string(n + 1));
  }
  m.field = [=](double t, const Vec2& x) {
    const double th = std::tanh(x.y() / l0);
    const double sech2 = 1.0 - th * th;
    double sum_cos = 0.0, sum_ksin = 0.0;
    for (int n = 0; n < 3; ++n) {
      const double ph = k[n] * (x.x() - cn[n] * t);
      sum_cos += en[n] * std::cos(ph);
      sum_ksin += en[n] * k[n] * std::sin(ph);
    }
    const double u = u0 * sech2 + 2.0 * u0 * sech2 * th * sum_cos;
    const double v = -u0 * l0 * sech2 * sum_ksin;
    return Vec2(u, v);
  };
  return m;
}

/// Solid-body rotation x' = -omega y, y' = omega x.
inline FlowModel make_rigid_rotation(const ParamMap& overrides = {}) {
  FlowModel m;
  m.name = "rigid_rotation";
  m.params = merged_params(m.name, overrides);
  const double w = param(m.params, "half_width");
  m.domain = Box{-w, w, -w, w};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  const double omega = param(m.params, "omega");
  m.field = [omega](double, const Vec2& x) { return Vec2(-omega * x.y(), omega * x.x()); };
  return m;
}

/// Steady shear x' = omega y, y' = 0.
inline FlowModel make_linear_shear(const ParamMap& overrides = {}) {
  FlowModel m;
  m.name = "linear_shear";
  m.params = merged_params(m.name, overrides);
  const double w = param(m.params, "half_width");
  m.domain = Box{-w, w, -w, w};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  const double omega = param(m.params, "omega");
  m.field = [omega](double, const Vec2& x) { return Vec2(omega * x.y(), 0.0); };
  return m;
}

/// V = 0 on the unit square.
inline FlowModel make_identity(const ParamMap& overrides = {}) {
  FlowModel m;
  m.name = "identity";
  m.params = merged_params(m.name, overrides);
  m.domain = Box{0.0, 1.0, 0.0, 1.0};
  m.t0 = param(m.params, "t0");
  m.t1 = param(m.params, "t1");
  m.field = [](double, const Vec2&) { return Vec2(0.0, 0.0); };
  return m;
}

inline FlowModel make_model(const std::string& name, const ParamMap& overrides = {}) {
  if (name == "double_gyre") return make_double_gyre(overrides);
  if (name == "cylinder") return make_cylinder(overrides);
  if (name == "bickley") return make_bickley(overrides);
  if (name == "rigid_rotation") return make_rigid_rotation(overrides);
  if (name == "linear_shear") return make_linear_shear(overrides);
  if (name == "identity") return make_identity(overrides);
  throw Error("unknown model name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Sampled velocity data: bilinear in space, linear in time.

struct VelocitySamples {
  int nx = 0;
  int ny = 0;
  Box bounds;
  std::array<bool, 2> periodic{false, false};
  std::vector<double> times;
  /// u[k][j * nx + i], v likewise; k indexes `times`.
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> v;
};

inline void validate(const VelocitySamples& s) {
  if (s.nx < 2 || s.ny < 2) throw Error("velocity data: need nx, ny >= 2");
  if (!s.bounds.valid()) throw Error("velocity data: degenerate bounds");
  if (s.times.empty()) throw Error("velocity data: no time blocks");
  for (std::size_t k = 1; k < s.times.size(); ++k) {
    if (!(s.times[k] > s.times[k - 1])) throw Error("velocity data: non-monotone times");
  }
  if (s.u.size() != s.times.size() || s.v.size() != s.times.size()) {
    throw Error("velocity data: shape mismatch between times and blocks");
  }
  const std::size_t n = static_cast<std::size_t>(s.nx) * s.ny;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    if (s.u[k].size() != n || s.v[k].size() != n) {
      throw Error("velocity data: shape mismatch in block " + std::to_string(k));
    }
  }
}

inline FlowModel make_sampled_model(VelocitySamples samples, std::string name = "velocity_data") {
  validate(samples);
  FlowModel m;
  m.name = std::move(name);
  m.domain = samples.bounds;
  m.periodic = samples.periodic;
  m.t0 = samples.times.front();
  // A single block is a steady field; give it an unbounded time span.
  m.t1 = samples.times.size() == 1 ? samples.times.front() + 1e300 : samples.times.back();
  m.defined_outside = false;
  auto s = std::make_shared<const VelocitySamples>(std::move(samples));
  m.field = [s](double t, const Vec2& x) {
    const int nx = s->nx, ny = s->ny;
    // Periodic data repeats the first column/row at the far edge, so the
    // sample spacing divides the full extent by (n - 1).
    auto locate = [](double coord, double lo, double hi, int n, int& i0, double& f) {
      const double h = (hi - lo) / (n - 1);
      double r = (coord - lo) / h;
      r = std::clamp(r, 0.0, static_cast<double>(n - 1));
      i0 = std::min(static_cast<int>(std::floor(r)), n - 2);
      f = r - i0;
    };
    int i0, j0;
    double fx, fy;
    locate(x.x(), s->bounds.x_lo, s->bounds.x_hi, nx, i0, fx);
    locate(x.y(), s->bounds.y_lo, s->bounds.y_hi, ny, j0, fy);
    auto bilinear = [&](const std::vector<double>& g) {
      const double a = g[j0 * nx + i0], b = g[j0 * nx + i0 + 1];
      const double c = g[(j0 + 1) * nx + i0], d = g[(j0 + 1) * nx + i0 + 1];
      return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
    };
    const auto& ts = s->times;
    std::size_t k = 0;
    double ft = 0.0;
    if (ts.size() > 1) {
      const double tc = std::clamp(t, ts.front(), ts.back());
      k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), tc) - ts.begin());
      k = std::clamp<std::size_t>(k, 1, ts.size() - 1) - 1;
      ft = (tc - ts[k]) / (ts[k + 1] - ts[k]);
    }
    Vec2 v0(bilinear(s->u[k]), bilinear(s->v[k]));
    if (ts.size() == 1 || ft == 0.0) return v0;
    Vec2 v1(bilinear(s->u[k + 1]), bilinear(s->v[k + 1]));
    return Vec2((1 - ft) * v0 + ft * v1);
  };
  return m;
}

}  // namespace geomix
