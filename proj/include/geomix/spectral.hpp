#pragma once

#include "geomix/eigensolver.hpp"
#include "geomix/error.hpp"
#include "geomix/fem_operator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace geomix {

/// How detect_eigengap picks the gap.
///   first_significant: first i >= 2 whose gap lambda_i - lambda_{i+1}
///                      exceeds 10% of the scanned spectral range.
///   relative_jump:     argmax of gap_i / max(gap_{i-1}, floor).
enum class GapRule { first_significant, relative_jump };

inline const char* to_string(GapRule r) {
  return r == GapRule::first_significant ? "first_significant" : "relative_jump";
}

inline GapRule parse_gap_rule(const std::string& s) {
  if (s == "first_significant") return GapRule::first_significant;
  if (s == "relative_jump") return GapRule::relative_jump;
  throw Error("unknown gap rule '" + s + "'");
}

struct Eigengap {
  int k = 0;
  /// Gap after lambda_k over the largest earlier gap. Below 2 the gap is not
  /// clear cut.
  double confidence = 0.0;
  GapRule rule = GapRule::first_significant;
};

/// Number of quasi-components: the index k after which the scanned spectrum
/// (descending, lambda_1 ~ 0) has its gap.
inline Eigengap detect_eigengap(const std::vector<double>& lambda, int scan_depth = 21,
                                GapRule rule = GapRule::first_significant) {
  const int m = std::min<int>(scan_depth, static_cast<int>(lambda.size()));
  if (m < 3) throw Error("detect_eigengap: need at least 3 eigenvalues");
  // gap[i] = lambda_i - lambda_{i+1}, 1-based i in [1, m-1]
  std::vector<double> gap(m, 0.0);
  for (int i = 1; i < m; ++i) gap[i] = lambda[i - 1] - lambda[i];
  const double range = std::abs(lambda[m - 1] - lambda[0]);

  Eigengap out;
  out.rule = rule;
  if (rule == GapRule::relative_jump) {
    const double floor = std::max(1e-12 * range, 1e-300);
    double best = -1.0;
    for (int i = 2; i < m; ++i) {
      const double r = gap[i] / std::max(gap[i - 1], floor);
      if (r > best) {
        best = r;
        out.k = i;
      }
    }
  } else {
    const double tau = 0.1 * range;
    for (int i = 2; i < m && out.k == 0; ++i) {
      if (gap[i] > tau) out.k = i;
    }
    if (out.k == 0) {
      out.k = static_cast<int>(std::max_element(gap.begin() + 2, gap.end()) - gap.begin());
    }
  }
  double earlier = 0.0;
  for (int j = 1; j < out.k; ++j) earlier = std::max(earlier, gap[j]);
  out.confidence = earlier > 0.0 ? gap[out.k] / earlier : HUGE_VAL;
  return out;
}

/// Eigenpairs of S w = -lambda M w ordered 0 = lambda_1 >= lambda_2 >= ...
struct SpectralResult {
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenfunctions;  // dof x k, M-orthonormal columns
  std::vector<double> residuals;
  Eigengap gap;
  int restarts = 0;
  bool dense = false;

  int count() const { return static_cast<int>(eigenvalues.size()); }
};

struct SpectrumOptions {
  double tol = 1e-10;
  int scan_depth = 21;
  GapRule gap_rule = GapRule::first_significant;
  int dense_threshold = 2000;
};

inline SpectralResult solve_spectrum(const DiscreteOperatorPair& pair, int k,
                                     const SpectrumOptions& opt = {}) {
  if (k < 2) throw Error("solve_spectrum: need k >= 2");
  if (k >= pair.size()) throw Error("solve_spectrum: k must be below the matrix dimension");
  EigenOptions eo;
  eo.count = k;
  eo.tol = opt.tol;
  eo.dense_threshold = opt.dense_threshold;
  const EigenPairs ep = smallest_eigenpairs(pair.stiffness, pair.mass, eo);
  SpectralResult r;
  r.eigenfunctions = ep.vectors;
  r.restarts = ep.restarts;
  r.dense = ep.dense;
  for (int c = 0; c < k; ++c) {
    r.eigenvalues.push_back(ep.nu[c] > 0.0 ? -ep.nu[c] : 0.0);
    r.residuals.push_back(ep.residuals[c]);
  }
  if (k >= 3) r.gap = detect_eigengap(r.eigenvalues, opt.scan_depth, opt.gap_rule);
  return r;
}

}  // namespace geomix
