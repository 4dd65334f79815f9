#pragma once

#include "geomix/error.hpp"
#include "geomix/fem_operator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <vector>

namespace geomix {

struct HeatState {
  Eigen::VectorXd u;
  double t = 0.0;
  double eps = 0.0;
  double total_mass = 0.0;  // 1^T M u
  int step = 0;
};

/// Implicit Euler for du/dt = eps * Delta u in the matrix pair:
/// (M + dt eps S) u_next = M u. The factorization is built once.
class HeatSolver {
 public:
  HeatSolver(const DiscreteOperatorPair& pair, double eps, double dt)
      : pair_(&pair), eps_(eps), dt_(dt) {
    if (!(dt > 0.0)) throw Error("heat flow: dt must be positive");
    if (!(eps >= 0.0)) throw Error("heat flow: eps must be nonnegative");
    const SparseMatrix a = pair.mass + (dt * eps) * pair.stiffness;
    ldlt_.compute(a);
    if (ldlt_.info() != Eigen::Success) throw Error("heat flow: factorization failed");
    ones_mass_ = pair.mass * Eigen::VectorXd::Ones(pair.size());
  }

  Eigen::VectorXd step(const Eigen::VectorXd& u) const {
    Eigen::VectorXd next = ldlt_.solve(pair_->mass * u);
    if (ldlt_.info() != Eigen::Success) throw Error("heat flow: solve failed");
    return next;
  }

  double total_mass(const Eigen::VectorXd& u) const { return ones_mass_.dot(u); }
  double eps() const { return eps_; }
  double dt() const { return dt_; }

 private:
  const DiscreteOperatorPair* pair_;
  double eps_;
  double dt_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::VectorXd ones_mass_;
};

/// Evolve u0 over `nsteps` steps. Returns the initial state, every
/// `frame_stride`-th state (0 disables intermediate frames) and the final one.
/// `on_frame` is called for each returned state as it is produced.
inline std::vector<HeatState> evolve(const DiscreteOperatorPair& pair, const Eigen::VectorXd& u0,
                                     double eps, double dt, int nsteps, int frame_stride = 0,
                                     const std::function<void(const HeatState&)>& on_frame = {}) {
  if (u0.size() != pair.size()) throw Error("heat flow: initial state has wrong size");
  if (nsteps < 0) throw Error("heat flow: negative step count");
  const HeatSolver solver(pair, eps, dt);
  std::vector<HeatState> frames;
  HeatState s{u0, 0.0, eps, solver.total_mass(u0), 0};
  auto emit = [&](const HeatState& st) {
    frames.push_back(st);
    if (on_frame) on_frame(st);
  };
  emit(s);
  for (int n = 1; n <= nsteps; ++n) {
    s.u = solver.step(s.u);
    s.t = n * dt;
    s.step = n;
    s.total_mass = solver.total_mass(s.u);
    if (n == nsteps || (frame_stride > 0 && n % frame_stride == 0)) emit(s);
  }
  return frames;
}

/// Mass of |u| outside the set N, in the weight form of the pair (lumped):
/// sum over dofs i not in N of |u_i| (M 1)_i.
inline double leakage(const HeatState& state, const std::vector<int>& indicator,
                      const DiscreteOperatorPair& pair) {
  if (static_cast<int>(indicator.size()) != pair.size() || state.u.size() != pair.size()) {
    throw Error("leakage: size mismatch");
  }
  bool any = false;
  for (int v : indicator) any = any || v != 0;
  if (!any) throw Error("leakage: empty set N");
  const Eigen::VectorXd w = pair.mass * Eigen::VectorXd::Ones(pair.size());
  double out = 0.0;
  for (int i = 0; i < pair.size(); ++i) {
    if (indicator[i] == 0) out += std::abs(state.u[i]) * w[i];
  }
  return out;
}

/// Initial state 1_N.
inline Eigen::VectorXd indicator_vector(const std::vector<int>& indicator) {
  Eigen::VectorXd u(indicator.size());
  for (std::size_t i = 0; i < indicator.size(); ++i) u[i] = indicator[i] != 0 ? 1.0 : 0.0;
  return u;
}

}  // namespace geomix
