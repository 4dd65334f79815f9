#pragma once

#include "geomix/error.hpp"
#include "geomix/flow_map.hpp"
#include "geomix/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace geomix {

template <int Dim>
using MatD = Eigen::Matrix<double, Dim, Dim>;

/// Pullback metrics C(t_i) at one material point plus quadrature weights.
template <int Dim = 2>
struct MetricSamples {
  std::vector<MatD<Dim>> metrics;
  std::vector<double> weights;
};
using MetricSampleSet = MetricSamples<2>;

/// Harmonic-mean metric G_bar and its inverse, the averaged diffusion tensor.
template <int Dim = 2>
struct MeanMetricT {
  MatD<Dim> G_bar;
  MatD<Dim> D_bar;
};
using MeanMetric = MeanMetricT<2>;

/// How the time average weights the sampled instants.
enum class TimeWeighting { uniform, trapezoidal };

inline std::vector<double> time_weights(const std::vector<double>& times, TimeWeighting w) {
  const std::size_t n = times.size();
  if (n == 0) throw Error("time_weights: no instants");
  std::vector<double> out(n, 1.0 / n);
  if (w == TimeWeighting::trapezoidal && n > 1) {
    const double span = times.back() - times.front();
    for (std::size_t k = 0; k < n; ++k) {
      const double left = k > 0 ? times[k] - times[k - 1] : 0.0;
      const double right = k + 1 < n ? times[k + 1] - times[k] : 0.0;
      out[k] = 0.5 * (left + right) / span;
    }
  }
  return out;
}

/// Pullback of the spatial metric G along the linearized flow map J,
/// J^T G J, with roundoff asymmetry removed.
template <int Dim = 2>
MatD<Dim> cauchy_green(const MatD<Dim>& J, const MatD<Dim>& G = MatD<Dim>::Identity()) {
  const double det = J.determinant();
  const double scale = std::pow(J.cwiseAbs().maxCoeff(), Dim);
  if (!(std::abs(det) > 1e-14 * scale)) throw Error("cauchy_green: singular linearized flow map");
  const MatD<Dim> c = J.transpose() * G * J;
  return 0.5 * (c + c.transpose());
}

namespace detail {

template <int Dim>
void check_samples(const MetricSamples<Dim>& s) {
  if (s.metrics.empty() || s.metrics.size() != s.weights.size()) {
    throw Error("metric samples: need one weight per metric");
  }
  double wsum = 0.0;
  for (double w : s.weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-10) throw Error("metric samples: weights must sum to 1");
  for (const auto& c : s.metrics) {
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
      throw Error("metric samples: non-symmetric metric");
    }
    Eigen::LLT<MatD<Dim>> llt(c);
    if (llt.info() != Eigen::Success) throw Error("metric samples: metric not positive definite");
  }
}

}  // namespace detail

/// Symmetrize and lift eigenvalues below 1e-14 * mu_max to that floor.
template <int Dim = 2>
MatD<Dim> spd_repair(const MatD<Dim>& m) {
  const MatD<Dim> s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatD<Dim>> es(s);
  auto ev = es.eigenvalues();
  const double floor = 1e-14 * ev.maxCoeff();
  bool clamped = false;
  for (int i = 0; i < Dim; ++i) {
    if (ev[i] < floor) {
      ev[i] = floor;
      clamped = true;
    }
  }
  if (!clamped) return s;
  const MatD<Dim> r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

/// D_bar = sum_i w_i C_i^{-1}, G_bar = D_bar^{-1}.
template <int Dim = 2>
MeanMetricT<Dim> harmonic_mean(const MetricSamples<Dim>& s) {
  detail::check_samples(s);
  MatD<Dim> d = MatD<Dim>::Zero();
  for (std::size_t i = 0; i < s.metrics.size(); ++i) d += s.weights[i] * s.metrics[i].inverse();
  d = spd_repair<Dim>(d);
  MatD<Dim> g = d.inverse();
  return {0.5 * (g + g.transpose()), d};
}

/// Inversion-free planar variant: C_bar = sum_i w_i C_i / |C_i|,
/// G_bar = C_bar / |C_bar|.
template <int Dim = 2>
MeanMetricT<Dim> harmonic_mean_2d_shortcut(const MetricSamples<Dim>& s) {
  static_assert(Dim == 2, "the inversion-free shortcut holds in two dimensions only");
  detail::check_samples(s);
  Mat2 cbar = Mat2::Zero();
  for (std::size_t i = 0; i < s.metrics.size(); ++i) {
    cbar += s.weights[i] / s.metrics[i].determinant() * s.metrics[i];
  }
  const double det = cbar.determinant();
  const Mat2 g = symmetrize(cbar / det);
  // D_bar = G_bar^{-1} = adj(C_bar), no division needed.
  Mat2 d;
  d << cbar(1, 1), -cbar(0, 1), -cbar(1, 0), cbar(0, 0);
  return {g, spd_repair<2>(symmetrize(d))};
}

/// Pointwise diagnostics of an averaged diffusion tensor.
struct TensorDiagnostics {
  double mu_min = 1.0;
  double mu_max = 1.0;
  Vec2 v_min{0.0, 1.0};
  Vec2 v_max{1.0, 0.0};
  double log10_anisotropy = 0.0;
  double density = 1.0;          // |D_bar|^{-1/2}
  double eff_diffusivity = 1.0;  // |D_bar|^{1/2}
};

/// Eigenpairs, anisotropy, density and effective diffusivity of D_bar. An
/// accurately computed determinant may be supplied.
inline TensorDiagnostics diagnostics(const Mat2& d_bar, std::optional<double> det = std::nullopt) {
  const SymEigen2 e = sym_eigen2(d_bar, det);
  TensorDiagnostics t;
  t.mu_min = e.mu_min;
  t.mu_max = e.mu_max;
  t.v_min = e.v_min;
  t.v_max = e.v_max;
  const double dt = det ? *det : e.mu_min * e.mu_max;
  t.log10_anisotropy = std::log10(e.mu_max / e.mu_min);
  t.eff_diffusivity = std::sqrt(dt);
  t.density = 1.0 / t.eff_diffusivity;
  return t;
}

/// Density of the mixing volume form after a single volume-preserving map
/// whose Cauchy-Green tensor has dominant eigenvalue mu.
inline double volume_preserving_density(double mu) { return 2.0 / std::sqrt(2.0 + mu + 1.0 / mu); }

/// g_bar-area of a surface element with unit g-area and unit normal covector
/// `normal`: sqrt|G_bar| * sqrt(normal^T D_bar normal).
inline double surface_flux(const Mat2& g_bar, const Vec2& normal) {
  if (std::abs(normal.norm() - 1.0) > 1e-10) throw Error("surface_flux: normal must be a unit vector");
  const Mat2 d_bar = g_bar.inverse();
  return std::sqrt(g_bar.determinant()) * std::sqrt(normal.dot(d_bar * normal));
}

/// Boundary normal of the mixing metric: D_bar nu_g scaled to unit g_bar-length.
inline Vec2 transformed_normal(const Mat2& d_bar, const Vec2& nu_g) {
  if (std::abs(nu_g.norm() - 1.0) > 1e-10) throw Error("transformed_normal: nu_g must be a unit vector");
  const Vec2 v = d_bar * nu_g;
  // |v|_{G_bar}^2 = nu^T D_bar G_bar D_bar nu = nu^T D_bar nu
  return v / std::sqrt(nu_g.dot(v));
}

/// Per-node harmonic-mean tensors and their diagnostics.
struct MixingMetricField {
  std::vector<Mat2> G_bar;
  std::vector<Mat2> D_bar;
  std::vector<TensorDiagnostics> diag;

  int size() const { return static_cast<int>(D_bar.size()); }
  std::vector<double> density() const {
    std::vector<double> v(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) v[i] = diag[i].density;
    return v;
  }
};

/// Field built from per-node tensors (e.g. read back from disk).
inline MixingMetricField field_from_tensors(std::vector<Mat2> d_bar) {
  MixingMetricField f;
  f.D_bar = std::move(d_bar);
  f.G_bar.reserve(f.D_bar.size());
  f.diag.reserve(f.D_bar.size());
  for (auto& d : f.D_bar) {
    d = spd_repair<2>(d);
    f.G_bar.push_back(symmetrize(d.inverse()));
    f.diag.push_back(diagnostics(d));
  }
  return f;
}

/// Constant tensor on n nodes.
inline MixingMetricField uniform_field(int n, const Mat2& d_bar = Mat2::Identity()) {
  return field_from_tensors(std::vector<Mat2>(n, d_bar));
}

struct MetricFieldOptions {
  Mat2 spatial_metric = Mat2::Identity();
  TimeWeighting weighting = TimeWeighting::uniform;
  /// Compare the accumulated tensor against harmonic_mean_2d_shortcut and
  /// fail on a relative mismatch above `cross_check_tol`.
  bool cross_check = false;
  double cross_check_tol = 1e-8;
};

/// Averaged diffusion tensors for every node of a flow-map sample.
///
/// C_i^{-1} is accumulated as K_i K_i^T with K_i = J_i^{-1} L, L L^T = G^{-1},
/// so no ill-conditioned Cauchy-Green matrix is ever inverted. The
/// determinant of the sum is taken from the Cauchy-Binet expansion over the
/// rank-one pieces, a sum of nonnegative terms that stays accurate when the
/// anisotropy reaches 1e13.
inline MixingMetricField build_metric_field(const FlowMapSample& sample,
                                            const MetricFieldOptions& opt = {}) {
  const int nt = sample.num_times();
  const std::vector<double> w = time_weights(sample.times, opt.weighting);
  const Mat2 ginv = opt.spatial_metric.inverse();
  const Mat2 l = Eigen::LLT<Mat2>(symmetrize(ginv)).matrixL();
  MixingMetricField f;
  f.G_bar.resize(sample.num_nodes);
  f.D_bar.resize(sample.num_nodes);
  f.diag.resize(sample.num_nodes);
  std::vector<std::pair<int, std::string>> failures;
  std::vector<Vec2> cols(2 * nt);
  std::vector<double> cw(2 * nt);
  std::vector<double> kdet(nt);
  const double ldet = l.determinant();
  for (int node = 0; node < sample.num_nodes; ++node) {
    try {
      Mat2 d = Mat2::Zero();
      for (int k = 0; k < nt; ++k) {
        Mat2 jinv;
        if (sample.has_inverses()) {
          jinv = sample.inverse_jacobians[sample.slot(node, k)];
          if (!(sample.jacobian_dets[sample.slot(node, k)] > 0.0)) {
            throw Error("non-positive Jacobian determinant at instant " + std::to_string(k));
          }
        } else {
          const Mat2& j = sample.jacobian(node, k);
          const double dj = j.determinant();
          if (!(dj > 0.0)) throw Error("non-positive Jacobian determinant at instant " + std::to_string(k));
          jinv << j(1, 1), -j(0, 1), -j(1, 0), j(0, 0);
          jinv /= dj;
        }
        const Mat2 kk = jinv * l;
        kdet[k] = (sample.has_inverses() ? 1.0 / sample.jacobian_dets[sample.slot(node, k)]
                                         : jinv.determinant()) *
                  ldet;
        d += w[k] * (kk * kk.transpose());
        cols[2 * k] = kk.col(0);
        cols[2 * k + 1] = kk.col(1);
        cw[2 * k] = cw[2 * k + 1] = w[k];
      }
      double det = 0.0;
      for (int p = 0; p < 2 * nt; ++p) {
        for (int q = p + 1; q < 2 * nt; ++q) {
          // Same-instant pairs: det K_k, known without cancellation.
          const double c = (q == p + 1 && p % 2 == 0) ? kdet[p / 2] : cross(cols[p], cols[q]);
          det += cw[p] * cw[q] * c * c;
        }
      }
      d = symmetrize(d);
      const Mat2 repaired = spd_repair<2>(d);
      const bool was_clamped = (repaired - d).cwiseAbs().maxCoeff() > 0.0;
      if (was_clamped || !(det > 0.0)) {
        d = repaired;
        det = d.determinant();
      }
      f.D_bar[node] = d;
      Mat2 g;
      g << d(1, 1), -d(0, 1), -d(1, 0), d(0, 0);
      f.G_bar[node] = g / det;
      f.diag[node] = diagnostics(d, det);
      if (opt.cross_check) {
        MetricSampleSet s;
        s.weights = w;
        for (int k = 0; k < nt; ++k) {
          s.metrics.push_back(cauchy_green<2>(sample.jacobian(node, k), opt.spatial_metric));
        }
        const MeanMetric ref = harmonic_mean_2d_shortcut(s);
        const double rel = (ref.D_bar - d).norm() / d.norm();
        if (rel > opt.cross_check_tol) {
          throw Error("2D shortcut cross-check mismatch " + std::to_string(rel));
        }
      }
    } catch (const Error& e) {
      failures.emplace_back(node, e.what());
    }
  }
  if (!failures.empty()) throw NodeFailures(std::move(failures));
  return f;
}

}  // namespace geomix
