#include "geomix/flow_map.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace geomix;
using std::numbers::pi;

TEST(Integrate, RigidRotationQuarterTurn) {
  const FlowModel m = make_rigid_rotation();
  StepControl c;
  c.max_step = 1e-3;
  const Vec2 x = integrate_flow(m, Vec2(1.0, 0.0), 0.0, pi / 2, c);
  EXPECT_NEAR(x.x(), 0.0, 1e-10);
  EXPECT_NEAR(x.y(), 1.0, 1e-10);
}

TEST(Integrate, AdaptiveAgreesWithFixed) {
  const FlowModel m = make_double_gyre();
  StepControl fixed;
  fixed.max_step = 1e-3;
  StepControl adaptive;
  adaptive.adaptive = true;
  const Vec2 a = integrate_flow(m, Vec2(0.3, 0.6), 0.0, 1.0, fixed);
  const Vec2 b = integrate_flow(m, Vec2(0.3, 0.6), 0.0, 1.0, adaptive);
  EXPECT_NEAR((a - b).norm(), 0.0, 1e-8);
}

TEST(Integrate, FourthOrderConvergence) {
  const FlowModel m = make_double_gyre();
  StepControl ref;
  ref.adaptive = true;
  ref.rtol = 1e-12;
  ref.atol = 1e-14;
  const Vec2 exact = integrate_flow(m, Vec2(0.3, 0.6), 0.0, 1.0, ref);
  StepControl c1, c2;
  c1.max_step = 0.04;
  c2.max_step = 0.02;
  const double e1 = (integrate_flow(m, Vec2(0.3, 0.6), 0.0, 1.0, c1) - exact).norm();
  const double e2 = (integrate_flow(m, Vec2(0.3, 0.6), 0.0, 1.0, c2) - exact).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.5);
}

TEST(Integrate, PeriodicWrapKeepsWinding) {
  // Rigid translation in x on the cylinder wraps back into [0, 2 pi).
  const FlowModel m = make_cylinder();
  const Vec2 x = integrate_flow(m, Vec2(6.0, 0.0), 0.0, 10.0);
  EXPECT_GE(x.x(), 0.0);
  EXPECT_LT(x.x(), 2 * pi);
  EXPECT_NEAR(x.y(), 0.0, 1e-12);
}

TEST(Linearized, ShearIsExact) {
  const FlowModel m = make_linear_shear({{"omega", 0.7}});
  const Mat2 j = linearized_flow(m, Vec2(0.2, -0.1), 0.0, 3.0, 1e-3);
  EXPECT_NEAR(j(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(j(0, 1), 2.1, 1e-10);
  EXPECT_NEAR(j(1, 0), 0.0, 1e-10);
  EXPECT_NEAR(j(1, 1), 1.0, 1e-10);
}

TEST(Linearized, RotationMatrix) {
  const FlowModel m = make_rigid_rotation();
  StepControl c;
  c.max_step = 1e-3;
  const Mat2 j = linearized_flow(m, Vec2(0.5, 0.5), 0.0, 1.0, 1e-4, c);
  EXPECT_NEAR((j - rotation(1.0)).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Linearized, SecondOrderInOffset) {
  // Nonlinear flow: FD error against a tight reference shrinks by ~4 when h halves.
  const FlowModel m = make_double_gyre();
  StepControl c;
  c.adaptive = true;
  c.rtol = 1e-13;
  c.atol = 1e-15;
  const Vec2 x0(0.4, 0.3);
  const Mat2 ref = linearized_flow(m, x0, 0.0, 0.3, 1e-5, c);
  const double e1 = (linearized_flow(m, x0, 0.0, 0.3, 4e-2, c) - ref).norm();
  const double e2 = (linearized_flow(m, x0, 0.0, 0.3, 2e-2, c) - ref).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.3);
}

TEST(Sample, FirstInstantIsIdentity) {
  const FlowModel m = make_double_gyre();
  const MaterialGrid g = MaterialGrid::uniform(m.domain, 6, 6);
  const FlowMapSample s = sample_flow(m, g, equidistant_times(0.0, 1.0, 5));
  ASSERT_TRUE(s.has_inverses());
  for (int node = 0; node < s.num_nodes; ++node) {
    EXPECT_EQ(s.position(node, 0), g.nodes[node]);
    EXPECT_EQ(s.jacobian(node, 0), Mat2::Identity());
  }
}

TEST(Sample, ChainedJacobianMatchesDirect) {
  const FlowModel m = make_double_gyre();
  const MaterialGrid g = MaterialGrid::uniform(Box{0.2, 0.8, 0.2, 0.8}, 4, 4);
  StepControl c;
  c.max_step = 1e-3;
  const FlowMapSample s = sample_flow(m, g, equidistant_times(0.0, 0.5, 6), c, 1e-5);
  for (int node = 0; node < s.num_nodes; ++node) {
    const Mat2 direct = linearized_flow(m, g.nodes[node], 0.0, 0.5, 1e-5, c);
    const Mat2 chained = s.jacobian(node, 5);
    EXPECT_LT((direct - chained).norm(), 1e-6 * direct.norm());
    // Area preserving flow.
    EXPECT_NEAR(s.jacobian_dets[s.slot(node, 5)], 1.0, 1e-6);
    EXPECT_LT((s.inverse_jacobians[s.slot(node, 5)] * chained - Mat2::Identity()).norm(), 1e-8);
  }
}

TEST(Sample, RejectsBadTimes) {
  const FlowModel m = make_double_gyre();
  const MaterialGrid g = MaterialGrid::uniform(m.domain, 3, 3);
  EXPECT_THROW(sample_flow(m, g, {0.0, 0.5, 0.5}), Error);
  EXPECT_THROW(sample_flow(m, g, {0.0, 2.0}), Error);
  EXPECT_THROW(equidistant_times(0.0, 1.0, 1), Error);
}

TEST(Sample, ExitFromSampledDomainIsReported) {
  VelocitySamples v;
  v.nx = v.ny = 2;
  v.bounds = Box{0.0, 1.0, 0.0, 1.0};
  v.times = {0.0, 1.0};
  v.u = {{1, 1, 1, 1}, {1, 1, 1, 1}};
  v.v = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  const FlowModel m = make_sampled_model(v);
  const MaterialGrid g = MaterialGrid::uniform(m.domain, 3, 3);
  try {
    sample_flow(m, g, equidistant_times(0.0, 1.0, 3));
    FAIL() << "expected NodeFailures";
  } catch (const NodeFailures& e) {
    EXPECT_GT(e.failures().size(), 0u);
  }
}
