#pragma once

#include "geomix/error.hpp"
#include "geomix/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace geomix {

/// Nodes as points in eigenfunction space.
struct SpectralEmbedding {
  Eigen::MatrixXd points;             // n_nodes x n_used
  std::vector<int> included_indices;  // 1-based eigenfunction indices
};

/// Leading `k` eigenfunctions as coordinates; optionally without the flat w_1.
inline SpectralEmbedding make_embedding(const SpectralResult& r, int k, bool drop_first = false) {
  if (k < 1 || k > r.count()) throw Error("embedding: need 1 <= k <= number of eigenfunctions");
  SpectralEmbedding e;
  const int first = drop_first ? 1 : 0;
  if (first >= k) throw Error("embedding: nothing left after dropping w_1");
  e.points = r.eigenfunctions.middleCols(first, k - first);
  for (int c = first; c < k; ++c) e.included_indices.push_back(c + 1);
  return e;
}

struct ClusterAssignment {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x dim
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int best_restart = 0;
};

struct KMeansOptions {
  int restarts = 20;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  int max_reseeds = 20;
};

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& a, int i, const Eigen::MatrixXd& b, int j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

/// One Lloyd run from k-means++ seeds.
inline ClusterAssignment lloyd_run(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng,
                                   const KMeansOptions& opt) {
  const int n = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  auto u01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  Eigen::MatrixXd c(k, dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  int pick = std::min(n - 1, static_cast<int>(u01() * n));
  c.row(0) = x.row(pick);
  for (int m = 1; m < k; ++m) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x, i, c, m - 1));
      total += d2[i];
    }
    if (total <= 0.0) {
      pick = std::min(n - 1, static_cast<int>(u01() * n));
    } else {
      double target = u01() * total;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    }
    c.row(m) = x.row(pick);
  }

  std::vector<int> label(n, -1);
  std::vector<int> count(k);
  int reseeds = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x, i, c, 0);
      for (int m = 1; m < k; ++m) {
        const double d = sq_dist(x, i, c, m);
        if (d < bd) {
          bd = d;
          best = m;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, dim);
    std::fill(count.begin(), count.end(), 0);
    for (int i = 0; i < n; ++i) {
      sum.row(label[i]) += x.row(i);
      ++count[label[i]];
    }
    bool empty = false;
    for (int m = 0; m < k; ++m) {
      if (count[m] > 0) {
        c.row(m) = sum.row(m) / count[m];
        continue;
      }
      // Empty cluster: move its centroid to the worst-fitted point.
      empty = true;
      if (++reseeds > opt.max_reseeds) throw Error("kmeans: empty-cluster collapse");
      int far = 0;
      double fd = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = sq_dist(x, i, c, label[i]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      c.row(m) = x.row(far);
      label[far] = m;
    }
    if (!changed && !empty) break;
  }
  ClusterAssignment out;
  out.labels = label;
  out.centroids = c;
  for (int i = 0; i < n; ++i) out.inertia += sq_dist(x, i, c, label[i]);
  return out;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds; the run with the lowest inertia
/// (first one on ties) over `restarts` runs is returned.
inline ClusterAssignment kmeans(const SpectralEmbedding& emb, int k, const KMeansOptions& opt = {}) {
  const int n = static_cast<int>(emb.points.rows());
  if (k < 2) throw Error("kmeans: need k >= 2");
  if (k > n) throw Error("kmeans: more clusters than points");
  if (opt.restarts < 1) throw Error("kmeans: need at least one restart");
  std::mt19937_64 rng(opt.seed);
  ClusterAssignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opt.restarts; ++r) {
    ClusterAssignment a = detail::lloyd_run(emb.points, k, rng, opt);
    if (a.inertia < best.inertia) {
      best = std::move(a);
      best.best_restart = r;
    }
  }
  best.seed = opt.seed;
  return best;
}

/// Minimum-cost assignment for a square cost matrix (Hungarian method).
/// Returns col_of_row.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error("hungarian: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

/// Fraction of nodes on which two labelings agree after the best matching
/// of labels of `a` to labels of `b`.
inline double label_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw Error("label_agreement: size mismatch");
  const int k = 1 + std::max(*std::max_element(a.begin(), a.end()),
                             *std::max_element(b.begin(), b.end()));
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < a.size(); ++i) confusion(a[i], b[i]) += 1.0;
  const std::vector<int> match = hungarian(-confusion);
  double agree = 0.0;
  for (int r = 0; r < k; ++r) agree += confusion(r, match[r]);
  return agree / static_cast<double>(a.size());
}

/// Fraction of entries within 10% of |c_hi - c_lo| of one of the two levels
/// of a 1D two-means fit.
inline double bimodality_score(const Eigen::VectorXd& x) {
  if (x.size() == 0) return 0.0;
  double lo = x.minCoeff(), hi = x.maxCoeff();
  if (hi - lo <= 0.0) return 1.0;
  for (int it = 0; it < 100; ++it) {
    double s0 = 0, s1 = 0;
    int n0 = 0, n1 = 0;
    const double mid = 0.5 * (lo + hi);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < mid) {
        s0 += x[i];
        ++n0;
      } else {
        s1 += x[i];
        ++n1;
      }
    }
    const double nlo = n0 ? s0 / n0 : lo, nhi = n1 ? s1 / n1 : hi;
    if (nlo == lo && nhi == hi) break;
    lo = nlo;
    hi = nhi;
  }
  const double band = 0.1 * std::abs(hi - lo);
  int near = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - lo) <= band || std::abs(x[i] - hi) <= band) ++near;
  }
  return static_cast<double>(near) / static_cast<double>(x.size());
}

struct IndicatorPair {
  Eigen::VectorXd plus;   // w2 + w3
  Eigen::VectorXd minus;  // w2 - w3
  double score = 0.0;     // mean bimodality of the two
};

inline IndicatorPair indicator_rotation_check(const Eigen::VectorXd& w2, const Eigen::VectorXd& w3) {
  if (w2.size() != w3.size()) throw Error("indicator_rotation_check: size mismatch");
  IndicatorPair p;
  p.plus = w2 + w3;
  p.minus = w2 - w3;
  p.score = 0.5 * (bimodality_score(p.plus) + bimodality_score(p.minus));
  return p;
}

}  // namespace geomix
