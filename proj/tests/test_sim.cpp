#include <gtest/gtest.h>

#include <cmath>

#include "dmef/error.hpp"
#include "dmef/sim.hpp"
#include "dmef/verify.hpp"
#include "oracles.hpp"

using namespace dmef;

namespace {

Scenario quiet_chua(std::uint64_t seed) {
  Scenario s = make_chua_scenario(seed);
  s.disturbances.clear();
  return s;
}

double max_error(const Trajectories& tr) {
  double worst = 0.0;
  for (int i = 1; i <= tr.nodes(); ++i) worst = std::max(worst, tr.errors(i).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace

TEST(Sim, ChuaScenarioConstants) {
  const Scenario s = make_chua_scenario(4);
  Matrix A(3, 3);
  A << -3.2, 10, 0, 1, -1, 1, 0, -14.87, 0;
  EXPECT_EQ(s.network.plant().A, A);
  EXPECT_EQ(s.network.edges().size(), 8u);
  EXPECT_EQ(s.grid().steps, 10000u);
  EXPECT_EQ(s.initial_gain(2), 10.0 * Matrix::Identity(3, 3));
  EXPECT_EQ(s.Minv.size(), 5u);
}

TEST(Sim, ExactTrackingWithoutDisturbances) {
  Scenario s = quiet_chua(1);
  const Vector x0 = sample_initial_state(s.x0_law, 3, 1);
  std::vector<NodeModel> nodes = s.network.nodes();
  for (NodeModel& n : nodes) n.xi = x0;
  s.network = build_network(s.network.plant(), nodes, s.network.edges());
  s.x0_law = FixedInitialState{x0};
  EXPECT_LE(max_error(simulate(s)), 1e-9);
}

TEST(Sim, ErrorDecaysWithoutDisturbances) {
  const Trajectories tr = simulate(quiet_chua(2));
  EXPECT_LE(tr.stacked_error(tr.grid.steps).norm(), 1e-3 * tr.stacked_error(0).norm());
}

TEST(Sim, DeterministicForEqualSeeds) {
  const Scenario s = make_chua_scenario(7);
  const Trajectories a = simulate(s), b = simulate(s);
  EXPECT_EQ(a.x, b.x);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a.xhat[i], b.xhat[i]);
    EXPECT_EQ(a.K[i], b.K[i]);
  }
  const Trajectories c = simulate(make_chua_scenario(8));
  EXPECT_NE(a.x0, c.x0);
}

TEST(Sim, ErrorOracleAgreesWithFullSimulation) {
  const Scenario s = make_chua_scenario(3);
  const Trajectories tr = simulate(s);
  const Matrix e = simulate_error_oracle(s, *tr.field, tr.stacked_error(0));
  double dev = 0.0;
  for (std::size_t k = 0; k <= tr.grid.steps; ++k) {
    dev = std::max(dev, (e.col(static_cast<Index>(k)) - tr.stacked_error(k)).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(dev, 1e-8);

  const Scenario q = quiet_chua(3);
  const DisturbanceField none(q.network, q.disturbances, q.grid(), q.seed);
  EXPECT_EQ(simulate_error_oracle(q, none, Vector::Zero(15)).norm(), 0.0);
}

TEST(Sim, SingleNodeMatchesScalarRecursion) {
  // e' = (a - c^2 / (r k(t))) e with k from the scalar closed form.
  const double a = -0.5, b = 1.0, c = 2.0, d = 0.5, k0 = 1.0, mu = 0.3;
  NodeModel node;
  node.C = Matrix::Constant(1, 1, c);
  node.D = Matrix::Constant(1, 1, d);
  node.xi = Vector::Zero(1);
  node.Xcal = Matrix::Constant(1, 1, k0);
  Scenario s;
  s.network = build_network({Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b)}, {node}, {});
  s.horizon = 2.0;
  s.dt = 1e-3;
  s.x0_law = FixedInitialState{Vector::Constant(1, 1.0)};
  s.Minv = {Matrix::Constant(1, 1, mu)};
  const Trajectories tr = simulate(s);

  const double r = d * d;
  const double q = b * b, sk = c * c / r - mu;
  const auto f = [&](double t, double e) { return (a - c * c / (r * oracle::scalar_riccati(a, q, sk, k0, t))) * e; };
  double e = -1.0, t = 0.0;
  const double h = 1e-4;
  for (int k = 0; k < 20000; ++k, t += h) {
    const double k1 = f(t, e), k2 = f(t + h / 2, e + h / 2 * k1), k3 = f(t + h / 2, e + h / 2 * k2),
                 k4 = f(t + h, e + h * k3);
    e += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(tr.error(1, tr.grid.steps)(0), e, 1e-9);
  EXPECT_NEAR(tr.gain(1, tr.grid.steps)(0, 0), oracle::scalar_riccati(a, q, sk, k0, 2.0), 1e-10);
}

TEST(Sim, StepHalvingChangesFinalErrorLittle) {
  Scenario s = make_chua_scenario(5);
  const Trajectories coarse = simulate(s);
  s.dt = 5e-4;
  const Trajectories fine = simulate(s);
  EXPECT_LE(std::abs(coarse.stacked_error(coarse.grid.steps).norm() - fine.stacked_error(fine.grid.steps).norm()),
            1e-6);
}

TEST(Sim, OverweightedNodeLosesPositivityWithTimestamp) {
  Scenario s = make_chua_scenario(1);
  s.Minv[0] = 1e3 * Matrix::Identity(3, 3);
  try {
    simulate(s);
    FAIL();
  } catch (const LostPositivity& e) {
    EXPECT_EQ(e.node(), 1);
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 10.0);
  }
}

TEST(Sim, IsolationCutsIncomingInformation) {
  const Scenario s = make_chua_scenario(1);
  const Scenario iso = isolate_node(s, 1);
  for (const auto& [j, link] : iso.network.node(1).links) EXPECT_EQ(link.W.norm(), 0.0);
  EXPECT_EQ(iso.network.derived(1).Delta.norm(), 0.0);
  EXPECT_EQ(iso.Minv[0].norm(), 0.0);
  EXPECT_EQ(iso.Minv[2], s.Minv[2]);
  EXPECT_EQ(iso.network.node(3).links.at(1).W, Matrix::Identity(3, 3));
}

TEST(Sim, PulseEnergyMatchesClosedForm) {
  const Scenario s = make_chua_scenario(1);
  const Trajectories tr = simulate(s);
  const ChannelLayout layout(s.network);
  // three components of amplitude 1 for 1 s
  EXPECT_NEAR(tr.disturbances.l2_squared(layout.model()), 3.0, 3e-6);
  EXPECT_NEAR(tr.disturbances.l2_squared(layout.measurement(2)), 1.0, 1e-6);
  EXPECT_NEAR(tr.field->l2_squared(layout.communication(4, 5)), 3.0, 1e-12);
}
