#include <gtest/gtest.h>

#include <cmath>

#include "dmef/error.hpp"
#include "dmef/riccati.hpp"
#include "dmef/sim.hpp"
#include "oracles.hpp"

using namespace dmef;

namespace {

RiccatiCoefficients scalar_coeffs(double a, double q, double s) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, s)};
}

double final_error(double a, double q, double s, double k0, double T, double dt) {
  const GainTrajectory tr = integrate_riccati(scalar_coeffs(a, q, s), Matrix::Constant(1, 1, k0), TimeGrid::over(T, dt));
  return std::abs(tr.K.back()(0, 0) - oracle::scalar_riccati(a, q, s, k0, T));
}

}  // namespace

TEST(Riccati, ScalarMatchesClosedForm) {
  const double a = 0.5, q = 2.0, s = 3.0, k0 = 1.0;
  const TimeGrid grid = TimeGrid::over(2.0, 0.01);
  const GainTrajectory tr = integrate_riccati(scalar_coeffs(a, q, s), Matrix::Constant(1, 1, k0), grid);
  for (std::size_t k = 0; k <= grid.steps; k += 10) {
    EXPECT_NEAR(tr.K[k](0, 0), oracle::scalar_riccati(a, q, s, k0, grid.at(k)), 1e-9);
  }
}

TEST(Riccati, FourthOrderConvergence) {
  const double e1 = final_error(1.0, 1.0, 4.0, 10.0, 2.0, 0.01);
  const double e2 = final_error(1.0, 1.0, 4.0, 10.0, 2.0, 0.005);
  const double ratio = e1 / e2;
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Riccati, RightSideElementwise) {
  std::mt19937_64 rng(7);
  const Index n = 3;
  RiccatiCoefficients c{oracle::random_matrix(rng, n, n), oracle::random_spd(rng, n), oracle::random_spd(rng, n)};
  c.S -= 2.0 * Matrix::Identity(n, n);
  const Matrix K = oracle::random_spd(rng, n);
  const Matrix f = riccati_rhs(K, c);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double v = c.S(i, j);
      for (Index k = 0; k < n; ++k) {
        v -= c.A(k, i) * K(k, j) + K(i, k) * c.A(k, j);
        for (Index l = 0; l < n; ++l) v -= K(i, k) * c.Q(k, l) * K(l, j);
      }
      EXPECT_NEAR(f(i, j), v, 1e-12 * (1.0 + std::abs(v)));
    }
  }
}

TEST(Riccati, NodeCoefficientsFromNetwork) {
  const Scenario s = make_chua_scenario(1);
  const Matrix Minv = 3.0 * Matrix::Identity(3, 3);
  const RiccatiCoefficients c = node_riccati_coefficients(s.network, 3, Minv);
  const NodeModel& node = s.network.node(3);
  const double r = 0.025 * 0.025;
  // node 3 hears from 1, 2 and 4 through W = I, U = 0.35 I
  const Matrix expected = node.C.transpose() * node.C / r + (3.0 / 0.35) * Matrix::Identity(3, 3) - Minv;
  EXPECT_LE((c.S - expected).norm(), 1e-9 * expected.norm());
  EXPECT_LE((c.Q - 0.16 * Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(Riccati, DetectsLossOfPositivity) {
  // k' = -k^2 - 1 from 0.5 reaches zero at atan(0.5)
  try {
    integrate_riccati(scalar_coeffs(0.0, 1.0, -1.0), Matrix::Constant(1, 1, 0.5), TimeGrid::over(1.0, 1e-3), 4);
    FAIL();
  } catch (const LostPositivity& e) {
    EXPECT_EQ(e.node(), 4);
    EXPECT_NEAR(e.time(), std::atan(0.5), 2e-3);
  }
}

TEST(Riccati, StackedMatchesPerNodeOnShortHorizon) {
  const Scenario s = make_chua_scenario(1);
  std::vector<Matrix> M;
  for (const Matrix& m : s.Minv) M.push_back(m.inverse());
  const GlobalMatrices gm = assemble_global(s.network, M);
  const TimeGrid grid = TimeGrid::over(1.0, 1e-3);
  std::vector<Matrix> K0;
  for (int i = 1; i <= 5; ++i) K0.push_back(s.initial_gain(i));
  const GainTrajectory stacked = integrate_global_riccati(s.network, gm, K0, grid);
  for (int i = 1; i <= 5; ++i) {
    const GainTrajectory local =
        integrate_riccati(node_riccati_coefficients(s.network, i, s.Minv[i - 1]), K0[i - 1], grid, i);
    for (std::size_t k = 0; k <= grid.steps; ++k) {
      ASSERT_LE((stacked.K[k].block(3 * (i - 1), 3 * (i - 1), 3, 3) - local.K[k]).norm(), 1e-9);
    }
    EXPECT_EQ(stacked.K.back().block(3 * (i - 1), 0, 3, 3 * (i - 1)).norm(), 0.0);
  }
}

TEST(Are, ScalarClosedForm) {
  const AreSolution sol =
      solve_are_stabilizing(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0));
  EXPECT_NEAR(sol.Zplus(0, 0), oracle::scalar_are(1.0, 1.0, 2.0), 1e-12);
  EXPECT_LT(sol.closed_loop_spectral_abscissa, 0.0);
}

TEST(Are, ReducesToLyapunovWithoutQuadraticTerm) {
  Matrix A(3, 3);
  A << -1.0, 2.0, 0.0,
       0.0, -2.0, 1.0,
       0.5, 0.0, -3.0;
  Matrix B(3, 1);
  B << 1.0, 0.5, -1.0;
  const AreSolution sol = solve_are_stabilizing(A, B, Matrix::Zero(3, 3));
  // A Z + Z A^T = -B B^T
  const Matrix expected = oracle::lyapunov(A.transpose(), B * B.transpose());
  EXPECT_LE((sol.Zplus - expected).norm(), 1e-10 * expected.norm());
}

TEST(Are, ChuaNodesHaveStabilizingSolutions) {
  const Scenario s = make_chua_scenario(1);
  for (int i = 1; i <= 5; ++i) {
    const RiccatiCoefficients c = node_riccati_coefficients(s.network, i, s.Minv[i - 1]);
    const AreSolution sol = solve_are_stabilizing(c.A, s.network.plant().B, c.S);
    const Matrix& Z = sol.Zplus;
    const Matrix res = Z * c.A.transpose() + c.A * Z - Z * c.S * Z + s.network.Q();
    EXPECT_LE(res.norm(), 1e-8 * (1.0 + Z.squaredNorm())) << "node " << i;
    EXPECT_LT(sol.closed_loop_spectral_abscissa, 0.0);
    EXPECT_TRUE(is_positive_definite(Z));
  }
}

TEST(Are, NoSolutionWhenHamiltonianTouchesAxis) {
  try {
    solve_are_stabilizing(Matrix::Constant(1, 1, 0.1), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, -1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoStabilizingSolution);
  }
}

TEST(Are, StabilizabilityRankTest) {
  Matrix A(2, 2);
  A << 1.0, 0.0, 0.0, -1.0;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  EXPECT_FALSE(is_stabilizable(A, B));
  EXPECT_TRUE(is_stabilizable(-A * A, B));
  B << 1.0, 0.0;
  EXPECT_TRUE(is_stabilizable(A, B));
  B << 0.0, 1.0;
  try {
    solve_are_stabilizing(A, B, Matrix::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStabilizable);
  }
}

TEST(Are, GainConvergesToInverseSolution) {
  const double a = 0.3, q = 1.0, s = 2.0;
  const AreSolution sol =
      solve_are_stabilizing(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, s));
  const TimeGrid grid = TimeGrid::over(10.0, 1e-3);
  const GainTrajectory from_above = integrate_riccati(scalar_coeffs(a, q, s), Matrix::Constant(1, 1, 10.0), grid);
  const LimitReport above = verify_prop1_limit(from_above, sol);
  EXPECT_TRUE(above.initial_dominates);
  EXPECT_LE(above.final_gap, 1e-8);
  EXPECT_EQ(above.last_increase_time, 0.0);

  const GainTrajectory from_below = integrate_riccati(scalar_coeffs(a, q, s), Matrix::Constant(1, 1, 0.1), grid);
  EXPECT_THROW(verify_prop1_limit(from_below, sol), Error);
  const LimitReport below = verify_prop1_limit(from_below, sol, false);
  EXPECT_FALSE(below.initial_dominates);
  EXPECT_LE(below.final_gap, 1e-8);
}
