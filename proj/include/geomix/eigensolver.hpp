#pragma once

#include "geomix/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace geomix {

/// Options for the smallest eigenpairs of S x = nu M x.
struct EigenOptions {
  int count = 6;
  double tol = 1e-10;           // |Op y - theta y|_M / theta for Op = (S + shift M)^{-1} M
  int block_size = 4;
  int max_restarts = 400;
  int dense_threshold = 2000;   // dense solve below this dimension
  double shift = 0.0;           // factor S + shift M; 0 picks 1e-8 median(S_ii / M_ii)
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// nu ascending (nu >= 0), M-orthonormal columns. `residuals` holds the
/// normwise backward error |S x - nu M x| / ((|S|_1 + nu |M|_1) |x|).
struct EigenPairs {
  Eigen::VectorXd nu;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;
  int restarts = 0;
  bool dense = false;
};

namespace detail {

inline double one_norm(const Eigen::SparseMatrix<double>& a) {
  double best = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Normalize to unit M-norm, then flip so the first entry of largest
/// magnitude is positive.
inline void normalize_columns(Eigen::MatrixXd& x, const Eigen::SparseMatrix<double>& m) {
  for (int c = 0; c < x.cols(); ++c) {
    const double nrm = std::sqrt(std::max(0.0, x.col(c).dot(m * x.col(c))));
    if (nrm > 0.0) x.col(c) /= nrm;
    Eigen::Index idx = 0;
    x.col(c).cwiseAbs().maxCoeff(&idx);
    if (x(idx, c) < 0.0) x.col(c) = -x.col(c);
  }
}

/// Rayleigh quotients and relative residuals of M-normalized columns.
inline void finish_pairs(const Eigen::SparseMatrix<double>& s, const Eigen::SparseMatrix<double>& m,
                         EigenPairs& out) {
  normalize_columns(out.vectors, m);
  const int k = static_cast<int>(out.vectors.cols());
  const double s_norm = one_norm(s), m_norm = one_norm(m);
  out.nu.resize(k);
  out.residuals.resize(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd x = out.vectors.col(c);
    const Eigen::VectorXd sx = s * x;
    const Eigen::VectorXd mx = m * x;
    const double nu = std::max(0.0, x.dot(sx) / x.dot(mx));
    out.nu[c] = nu;
    out.residuals[c] = (sx - nu * mx).norm() / std::max((s_norm + nu * m_norm) * x.norm(), 1e-300);
  }
  // Rayleigh quotients may reorder nearly degenerate pairs.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return out.nu[a] < out.nu[b]; });
  EigenPairs sorted = out;
  for (int c = 0; c < k; ++c) {
    sorted.nu[c] = out.nu[order[c]];
    sorted.residuals[c] = out.residuals[order[c]];
    sorted.vectors.col(c) = out.vectors.col(order[c]);
  }
  out = std::move(sorted);
}

inline EigenPairs dense_eigenpairs(const Eigen::SparseMatrix<double>& s,
                                   const Eigen::SparseMatrix<double>& m, int count) {
  const Eigen::MatrixXd sd = Eigen::MatrixXd(s);
  const Eigen::MatrixXd md = Eigen::MatrixXd(m);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (sd + sd.transpose()), 0.5 * (md + md.transpose()), Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw Error("dense generalized eigensolver failed");
  EigenPairs out;
  out.dense = true;
  out.vectors = es.eigenvectors().leftCols(count);
  finish_pairs(s, m, out);
  return out;
}

/// M-orthogonalize the columns of `z` against the M-orthonormal `v` (with
/// mv = M v), then against each other. Columns that vanish are replaced by
/// random vectors.
inline void block_orthonormalize(Eigen::MatrixXd& z, const Eigen::MatrixXd& v,
                                 const Eigen::MatrixXd& mv, const Eigen::SparseMatrix<double>& m,
                                 std::mt19937_64& rng) {
  const Eigen::Index n = z.rows();
  for (int c = 0; c < z.cols(); ++c) {
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd x = z.col(c);
      const double before = std::sqrt(std::max(0.0, x.dot(m * x)));
      for (int pass = 0; pass < 2; ++pass) {
        if (v.cols() > 0) x -= v * (mv.transpose() * x);
        for (int p = 0; p < c; ++p) x -= z.col(p) * (z.col(p).dot(m * x));
      }
      const double after = std::sqrt(std::max(0.0, x.dot(m * x)));
      if (after > 1e-10 * before && after > 0.0) {
        z.col(c) = x / after;
        break;
      }
      if (attempt > 8) throw Error("eigensolver: cannot extend the search space");
      for (Eigen::Index i = 0; i < n; ++i) z(i, c) = uniform01(rng) - 0.5;
    }
  }
}

}  // namespace detail

/// Smallest `count` eigenpairs of the symmetric-definite pencil (S, M), S
/// positive semidefinite. Shift-invert block Krylov iteration with thick
/// restarts and Rayleigh-Ritz extraction; dense solve for small problems.
inline EigenPairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& s,
                                      const Eigen::SparseMatrix<double>& m,
                                      const EigenOptions& opt) {
  const int n = static_cast<int>(s.rows());
  if (s.cols() != n || m.rows() != n || m.cols() != n) throw Error("eigensolver: size mismatch");
  if (opt.count < 1 || opt.count >= n) {
    throw Error("eigensolver: requested " + std::to_string(opt.count) +
                " eigenpairs of a problem of dimension " + std::to_string(n));
  }
  if (n < opt.dense_threshold) return detail::dense_eigenpairs(s, m, opt.count);

  double sigma = opt.shift;
  if (sigma <= 0.0) {
    // The median is indifferent to the few nodes whose tensors are many
    // orders of magnitude above the rest.
    std::vector<double> ratio(n);
    const Eigen::VectorXd sd = s.diagonal(), md = m.diagonal();
    for (int i = 0; i < n; ++i) ratio[i] = md[i] > 0.0 ? sd[i] / md[i] : 0.0;
    std::nth_element(ratio.begin(), ratio.begin() + n / 2, ratio.end());
    sigma = 1e-8 * ratio[n / 2];
    if (!(sigma > 0.0)) sigma = 1e-8;
  }
  const Eigen::SparseMatrix<double> shifted = s + sigma * m;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw Error("eigensolver: factorization of S + sigma M failed");
  if ((ldlt.vectorD().array() <= 0.0).any()) {
    throw Error("eigensolver: S + sigma M is not positive definite");
  }
  auto apply = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = ldlt.solve(m * x);
    if (ldlt.info() != Eigen::Success) throw Error("eigensolver: triangular solve failed");
    return y;
  };

  const int k = opt.count;
  const int p = std::max(1, opt.block_size);
  int mmax = std::max(2 * (k + p), k + 6 * p);
  mmax = std::min(mmax, n - p);
  mmax = std::max(mmax, k + p);
  const int keep = std::min(mmax - p, k + std::max(p, (mmax - k) / 2));

  std::mt19937_64 rng(opt.seed);
  Eigen::MatrixXd v(n, 0), w(n, 0), mv(n, 0);
  Eigen::MatrixXd z(n, p);
  for (int c = 0; c < p; ++c) {
    for (int i = 0; i < n; ++i) z(i, c) = detail::uniform01(rng) - 0.5;
  }

  auto append = [](Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
    out << a, b;
    a.swap(out);
  };

  EigenPairs out;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    while (v.cols() < mmax) {
      detail::block_orthonormalize(z, v, mv, m, rng);
      const Eigen::MatrixXd wz = apply(z);
      append(v, z);
      append(mv, m * z);
      append(w, wz);
      z = wz;
    }
    // Rayleigh-Ritz on span(V) for Op = (S + sigma M)^{-1} M.
    Eigen::MatrixXd h = mv.transpose() * w;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw Error("eigensolver: Rayleigh-Ritz step failed");
    // Largest theta first.
    const Eigen::MatrixXd y = es.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd theta = es.eigenvalues().reverse();

    const Eigen::MatrixXd ritz = v * y.leftCols(k);
    const Eigen::MatrixXd op_ritz = w * y.leftCols(k);
    bool converged = true;
    for (int c = 0; c < k && converged; ++c) {
      const Eigen::VectorXd r = op_ritz.col(c) - theta[c] * ritz.col(c);
      const double rm = std::sqrt(std::max(0.0, r.dot(m * r)));
      converged = rm <= opt.tol * std::abs(theta[c]);
    }
    if (converged || restart == opt.max_restarts) {
      out.vectors = ritz;
      out.restarts = restart;
      detail::finish_pairs(s, m, out);
      if (!converged) {
        throw Error("eigensolver: no convergence after " + std::to_string(restart) +
                    " restarts (worst residual " + std::to_string(out.residuals.maxCoeff()) + ")");
      }
      return out;
    }
    // Thick restart: keep the leading Ritz vectors. The pending block z is
    // first orthogonalized against the whole current basis, so it carries
    // no component along the discarded Ritz vectors, and then continues the
    // Krylov sequence.
    detail::block_orthonormalize(z, v, mv, m, rng);
    const Eigen::MatrixXd yk = y.leftCols(keep);
    v = (v * yk).eval();
    w = (w * yk).eval();
    mv = (mv * yk).eval();
  }
  throw Error("eigensolver: unreachable");
}

}  // namespace geomix
