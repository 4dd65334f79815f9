// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include "geomix/geomix.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace geomix;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
  void check(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [x]");
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Per-cluster geometry on the material grid; x is treated as an angle when
// periodic.
struct ClusterShape {
  int nodes = 0;
  Vec2 center{0.0, 0.0};
  int components = 0;
  int complement_components = 0;
  bool wraps = false;  // touches every grid column
};

std::vector<ClusterShape> cluster_shapes(const PipelineResult& r) {
  const TriMesh& mesh = *r.mesh;
  const std::vector<int>& lab = r.clusters->labels;
  const int k = static_cast<int>(r.clusters->centroids.rows());
  const Box& b = r.grid.bounds;
  const double lx = b.x_hi - b.x_lo;
  std::vector<ClusterShape> out(k);
  std::vector<double> cs(k, 0.0), sn(k, 0.0), sx(k, 0.0), sy(k, 0.0);
  std::vector<std::vector<char>> column(k, std::vector<char>(r.grid.nx, 0));
  for (int v = 0; v < r.grid.size(); ++v) {
    const int c = lab[mesh.dof_of_vertex[v]];
    const Vec2& p = r.grid.nodes[v];
    const double th = 2 * pi * (p.x() - b.x_lo) / lx;
    cs[c] += std::cos(th);
    sn[c] += std::sin(th);
    sx[c] += p.x();
    sy[c] += p.y();
    ++out[c].nodes;
    column[c][v % r.grid.nx] = 1;
  }
  for (int c = 0; c < k; ++c) {
    const double n = std::max(out[c].nodes, 1);
    double x = sx[c] / n;
    if (r.model.periodic[0]) {
      double th = std::atan2(sn[c], cs[c]);
      if (th < 0) th += 2 * pi;
      x = b.x_lo + th / (2 * pi) * lx;
    }
    out[c].center = Vec2(x, sy[c] / n);
    dof_components(mesh, [&](int d) { return lab[d] == c; }, &out[c].components);
    dof_components(mesh, [&](int d) { return lab[d] != c; }, &out[c].complement_components);
    int cols = 0;
    for (char ch : column[c]) cols += ch;
    out[c].wraps = cols == r.grid.nx;
  }
  return out;
}

double periodic_distance(const Vec2& a, const Vec2& b, double period_x) {
  double dx = std::abs(a.x() - b.x());
  if (period_x > 0) dx = std::min(dx, period_x - dx);
  return std::hypot(dx, a.y() - b.y());
}

PipelineResult run_preset(const std::string& name, double& secs) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineResult r = run_pipeline(benchmark_preset(name), Stage::cluster);
  secs = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

Verdict ac1_identity_spectrum() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c;
  c.model = "identity";
  c.nx = c.ny = 65;  // 64 x 64 cells
  c.k_eigen = 6;
  const PipelineResult r = run_pipeline(c, Stage::spectrum);
  const double secs = seconds_since(t0);
  const auto& l = r.spectrum->eigenvalues;
  v.check(l[0] <= 0.0 && l[0] >= -1e-8, "l1=" + num(l[0]));
  v.check(within(l[1], -pi * pi, 0.02), "l2=" + num(l[1], 6));
  v.check(within(l[2], -pi * pi, 0.02), "l3=" + num(l[2], 6));
  v.check(within(l[3], -2 * pi * pi, 0.02), "l4=" + num(l[3], 6));
  v.check(secs < 10.0, "t=" + num(secs, 3) + "s");
  return v;
}

Verdict ac2_one_dimensional_oracle() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto phi = [](double x) { return x + 0.3 * std::sin(pi * x); };
  auto f = [](double x) { return std::cos(pi * x); };
  std::vector<double> n, e;
  for (int k : {128, 256, 512, 1024}) {
    n.push_back(k);
    e.push_back(oracle_1d_identity(phi, f, k));
  }
  const double slope = -loglog_slope(n, e);
  const double secs = seconds_since(t0);
  v.check(std::abs(slope - 2.0) <= 0.2, "slope=" + num(slope));
  v.check(secs < 1.0, "t=" + num(secs, 3) + "s");
  return v;
}

Verdict ac3_ball_average() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 128;
  std::vector<double> u(n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      u[j * n + i] = std::sin(2 * pi * i / n) * std::cos(2 * pi * j / n) + 0.5 * std::sin(2 * pi * j / n);
    }
  }
  std::vector<double> eps{0.05, 0.1, 0.2}, d;
  for (double e : eps) d.push_back(ball_average_expansion(u, n, e));
  const double slope = loglog_slope(eps, d);
  const double secs = seconds_since(t0);
  v.check(std::abs(slope - 4.0) <= 0.3, "slope=" + num(slope));
  v.check(secs < 30.0, "t=" + num(secs, 3) + "s");
  return v;
}

Verdict ac4_double_gyre() {
  Verdict v;
  double secs = 0;
  const PipelineResult r = run_preset("double_gyre", secs);
  const auto& l = r.spectrum->eigenvalues;
  v.check(r.spectrum->gap.k == 3, "gap=" + std::to_string(r.spectrum->gap.k));
  v.check(l[3] / l[2] > 2.0, "l4/l3=" + num(l[3] / l[2], 3));
  v.check(within(l[1], -7.92e-4, 0.35), "l2=" + num(l[1]) + " vs -7.92e-4");
  v.check(within(l[2], -2.95e-3, 0.35), "l3=" + num(l[2]) + " vs -2.95e-3");
  v.check(secs < 180.0, "t=" + num(secs, 3) + "s");
  return v;
}

Verdict ac5_cylinder() {
  Verdict v;
  double secs = 0;
  const PipelineResult r = run_preset("cylinder", secs);
  const auto& l = r.spectrum->eigenvalues;
  v.check(within(l[1], -0.00435, 0.35), "l2=" + num(l[1]) + " vs -0.00435");
  const double plateau = (l[3] - l[6]) / std::abs(l[3]);
  v.check(plateau < 0.25, "plateau=" + num(plateau, 3));

  const auto shapes = cluster_shapes(r);
  const double period = r.model.periodic[0] ? r.model.domain.x_hi - r.model.domain.x_lo : 0.0;
  const Vec2 targets[2] = {Vec2(pi / 2, pi / 2), Vec2(3 * pi / 2, pi / 2)};
  // Assign the two targets to distinct clusters by total distance.
  Eigen::MatrixXd cost(3, 3);
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < 3; ++t) {
      cost(c, t) = t < 2 ? periodic_distance(shapes[c].center, targets[t], period) : 0.0;
    }
  }
  const std::vector<int> col = hungarian(cost);
  for (int c = 0; c < 3; ++c) {
    if (col[c] == 2) continue;
    const ClusterShape& s = shapes[c];
    const double dist = cost(c, col[c]);
    const bool simple = s.components == 1 && s.complement_components == 1 && !s.wraps;
    v.check(dist < 0.5 && simple, "gyre@(" + num(s.center.x(), 3) + "," + num(s.center.y(), 3) +
                                      ") off=" + num(dist, 2) + " comps=" +
                                      std::to_string(s.components) + "/" +
                                      std::to_string(s.complement_components));
  }
  v.check(secs < 300.0, "t=" + num(secs, 3) + "s");
  return v;
}

Verdict ac6_bickley() {
  Verdict v;
  double secs = 0;
  const PipelineResult r = run_preset("bickley", secs);
  const auto& l = r.spectrum->eigenvalues;
  v.check(r.spectrum->gap.k == 7, "gap=" + std::to_string(r.spectrum->gap.k));
  v.check(l[7] / l[6] > 3.0, "l8/l7=" + num(l[7] / l[6], 3));

  const auto shapes = cluster_shapes(r);
  const int k = static_cast<int>(shapes.size());
  int background = 0;
  for (int c = 1; c < k; ++c) {
    if (shapes[c].nodes > shapes[background].nodes) background = c;
  }
  int above = 0, below = 0, compact = 0;
  for (int c = 0; c < k; ++c) {
    if (c == background) continue;
    const ClusterShape& s = shapes[c];
    if (s.components == 1 && !s.wraps) ++compact;
    (s.center.y() > 0 ? above : below) += 1;
  }
  v.check(k == 7, "k=" + std::to_string(k));
  v.check(shapes[background].wraps, "background spans the channel");
  v.check(compact == 6 && above == 3 && below == 3,
          "vortices=" + std::to_string(compact) + " (" + std::to_string(above) + " north, " +
              std::to_string(below) + " south)");
  v.check(secs < 600.0, "t=" + num(secs, 3) + "s");
  return v;
}

// Random SPD matrix with eigenvalues log-uniform in [lo, hi], separated by
// at least 1% so eigenvectors are well defined.
Mat2 random_spd(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ang(0.0, pi);
  std::uniform_real_distribution<double> lg(std::log(lo), std::log(hi));
  double a = std::exp(lg(rng)), b = std::exp(lg(rng));
  while (std::abs(std::log(a / b)) < 0.01) b = std::exp(lg(rng));
  const Mat2 r = rotation(ang(rng));
  Mat2 d = Mat2::Zero();
  d(0, 0) = a;
  d(1, 1) = b;
  return symmetrize(r * d * r.transpose());
}

Verdict ac7_correspondence() {
  Verdict v;
  std::mt19937_64 rng(7);
  double worst_mu = 0, worst_cos = 0, worst_aniso = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat2 c = random_spd(rng, 1e-2, 1e2);
    const MeanMetricT<2> m = harmonic_mean<2>({{Mat2::Identity(), c}, {0.5, 0.5}});
    const SymEigen2 de = sym_eigen2(m.D_bar);
    const SymEigen2 ce = sym_eigen2(c);
    // The largest C eigenvalue maps to the smallest D_bar eigenvalue.
    const double want_min = 0.5 * (1.0 + 1.0 / ce.mu_max);
    const double want_max = 0.5 * (1.0 + 1.0 / ce.mu_min);
    worst_mu = std::max({worst_mu, std::abs(de.mu_min - want_min) / want_min,
                         std::abs(de.mu_max - want_max) / want_max});
    worst_cos = std::max({worst_cos, 1.0 - std::abs(de.v_min.dot(ce.v_max)),
                          1.0 - std::abs(de.v_max.dot(ce.v_min))});
    // Volume-preserving case: det C = 1.
    Mat2 cv1 = random_spd(rng, 1.0, 1e4);
    cv1 /= std::sqrt(cv1.determinant());
    const double mu_c = sym_eigen2(cv1).mu_max;
    const MeanMetricT<2> m1 = harmonic_mean<2>({{Mat2::Identity(), cv1}, {0.5, 0.5}});
    const TensorDiagnostics dg = diagnostics(m1.D_bar);
    const double aniso = dg.mu_max / dg.mu_min;
    worst_aniso = std::max(worst_aniso, std::abs(aniso - mu_c) / mu_c);
  }
  v.check(worst_mu <= 1e-12, "eigen map err=" + num(worst_mu, 2));
  v.check(worst_cos < 1e-10, "1-|cos|=" + num(worst_cos, 2));
  v.check(worst_aniso <= 1e-10, "anisotropy err=" + num(worst_aniso, 2));
  return v;
}

Verdict ac8_shortcut() {
  Verdict v;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(2, 81);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    MetricSampleSet s;
    const int n = len(rng);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      Mat2 j;
      do {
        j << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
      } while (std::abs(j.determinant()) < 0.1);
      s.metrics.push_back(cauchy_green<2>(j));
      const double w = 0.5 + std::abs(gauss(rng));
      s.weights.push_back(w);
      total += w;
    }
    for (double& w : s.weights) w /= total;
    const MeanMetricT<2> a = harmonic_mean<2>(s);
    const MeanMetricT<2> b = harmonic_mean_2d_shortcut<2>(s);
    worst = std::max(worst, (a.D_bar - b.D_bar).norm() / a.D_bar.norm());
    worst = std::max(worst, (a.G_bar - b.G_bar).norm() / a.G_bar.norm());
  }
  v.check(worst <= 1e-12, "max rel diff=" + num(worst, 2));
  return v;
}

Verdict ac9_heat_flow() {
  Verdict v;
  // Mass and decay on an anisotropic field.
  {
    const TriMesh mesh = build_mesh(Box{0, 2, 0, 1}, 61, 31);
    std::vector<Mat2> d;
    for (const Vec2& p : mesh.vertices) {
      const Mat2 r = rotation(3.0 * p.x() * p.y());
      Mat2 l = Mat2::Zero();
      l(0, 0) = 1.0 + 50.0 * p.y() * p.y();
      l(1, 1) = 0.05 + 0.2 * p.x();
      d.push_back(symmetrize(r * l * r.transpose()));
    }
    const DiscreteOperatorPair pair = assemble(mesh, field_from_tensors(d), OperatorVariant::mixing_lb);
    Eigen::VectorXd u0(pair.size());
    for (int i = 0; i < pair.size(); ++i) u0[i] = mesh.vertices[i].x() < 0.5 ? 1.0 : 0.0;
    const auto frames = evolve(pair, u0, 1e-2, 0.05, 1000);
    const double m0 = frames.front().total_mass, m1 = frames.back().total_mass;
    const double mass_err = std::abs(m1 - m0) / std::abs(m0);
    v.check(mass_err <= 1e-10, "mass drift=" + num(mass_err, 2));

    const SpectralResult sp = solve_spectrum(pair, 6);
    const double eps = 1e-2, dt = 0.3;
    const HeatSolver h(pair, eps, dt);
    double worst = 0.0;
    for (int k = 0; k < 6; ++k) {
      const Eigen::VectorXd w = sp.eigenfunctions.col(k);
      const Eigen::VectorXd next = h.step(w);
      const double factor = 1.0 / (1.0 - dt * eps * sp.eigenvalues[k]);
      worst = std::max(worst, (next - factor * w).cwiseAbs().maxCoeff() / w.cwiseAbs().maxCoeff());
    }
    v.check(worst <= 1e-8, "decay err=" + num(worst, 2));
  }
  // Two high-density islands joined by a band of density delta. The density
  // climbs from delta with a quartic profile so that N, where it exceeds
  // delta, has a sharp edge on the mesh.
  for (double delta : {1e-2, 1e-4}) {
    const TriMesh mesh = build_mesh(Box{0, 2, 0, 1}, 201, 101);
    std::vector<Mat2> d;
    std::vector<int> in_n(mesh.num_dofs, 0);
    for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
      const double s = std::abs(mesh.vertices[i].x() - 1.0);
      double rho = 1.0;
      if (s <= 0.1 + 1e-12) {
        rho = delta;
      } else if (s < 0.4) {
        rho = delta + (1.0 - delta) * std::pow((s - 0.1) / 0.3, 4);
      }
      d.push_back(Mat2::Identity() / rho);  // density |D|^{-1/2} = rho
      in_n[mesh.dof_of_vertex[i]] = rho > delta ? 1 : 0;
    }
    const DiscreteOperatorPair pair =
        assemble(mesh, field_from_tensors(d), OperatorVariant::mixing_lb, MassKind::lumped);
    const DiscreteOperatorPair flat = assemble(mesh, uniform_field(static_cast<int>(mesh.vertices.size())),
                                               OperatorVariant::mixing_lb, MassKind::lumped);
    double vol_out = 0.0;
    for (int i = 0; i < mesh.num_dofs; ++i) {
      if (!in_n[i]) vol_out += flat.mass.coeff(i, i);
    }
    const double bound = delta * vol_out;
    double worst = 0.0;
    evolve(pair, indicator_vector(in_n), 1.0, 0.05, 200, 1,
           [&](const HeatState& s) { worst = std::max(worst, leakage(s, in_n, pair)); });
    v.check(worst <= 1.1 * bound, "delta=" + num(delta, 1) + " leak/bound=" + num(worst / bound, 3));
  }
  return v;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Verdict ac10_determinism() {
  Verdict v;
  const fs::path base = fs::absolute("acceptance_determinism");
  fs::remove_all(base);
  fs::create_directories(base);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(GEOMIX_CLI_PATH) + " benchmark double_gyre --quiet --output " +
                            (base / run).string() + " > " + (base / run).string() + ".log 2>&1";
    const int rc = std::system(cmd.c_str());
    v.check(rc == 0, std::string("run ") + run + " exit=" + std::to_string(rc));
  }
  if (!v.ok) return v;
  const auto a = read_tree(base / "a");
  const auto b = read_tree(base / "b");
  int differing = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  v.check(!a.empty() && a.size() == b.size() && differing == 0,
          std::to_string(a.size()) + " files, " + std::to_string(differing) + " differ");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 identity spectrum", ac1_identity_spectrum},
      {"AC2 1D operator identity", ac2_one_dimensional_oracle},
      {"AC3 ball-average expansion", ac3_ball_average},
      {"AC4 double gyre", ac4_double_gyre},
      {"AC5 cylinder flow", ac5_cylinder},
      {"AC6 Bickley jet", ac6_bickley},
      {"AC7 metric correspondence", ac7_correspondence},
      {"AC8 2D shortcut", ac8_shortcut},
      {"AC9 heat flow", ac9_heat_flow},
      {"AC10 determinism", ac10_determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.ok) ++failed;
    std::printf("%s %s: %s\n", v.ok ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
