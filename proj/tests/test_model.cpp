#include <gtest/gtest.h>

#include <cmath>

#include "dmef/error.hpp"
#include "dmef/model.hpp"
#include "dmef/sim.hpp"
#include "oracles.hpp"

using namespace dmef;

namespace {

NodeModel scalar_node(double c, double d) {
  NodeModel node;
  node.C = Matrix::Constant(1, 1, c);
  node.D = Matrix::Constant(1, 1, d);
  node.xi = Vector::Zero(1);
  node.Xcal = Matrix::Identity(1, 1);
  return node;
}

PlantModel scalar_plant(double a, double b) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b)};
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::Io;
}

}  // namespace

TEST(Model, ChuaLinkMatricesAndCouplingBlocks) {
  const Scenario s = make_chua_scenario(1);
  const Network& net = s.network;
  ASSERT_EQ(net.edges().size(), 8u);
  for (const auto& [i, j] : net.edges()) {
    EXPECT_LE((net.derived(i).links.at(j).U - 0.35 * Matrix::Identity(3, 3)).norm(), 1e-15);
  }
  for (int i = 1; i <= 5; ++i) {
    const double l = static_cast<double>(net.neighbors(i).size());
    EXPECT_LE((net.derived(i).Delta - (l / 0.35) * Matrix::Identity(3, 3)).norm(), 1e-13);
    EXPECT_LE((net.derived(i).DeltaTilde - l * 0.1 / (0.35 * 0.35) * Matrix::Identity(3, 3)).norm(), 1e-13);
  }
}

TEST(Model, TwoNodeCouplingCaseSplit) {
  const double u = 2.0, z = 0.5;
  NodeModel n1 = scalar_node(1.0, 1.0), n2 = scalar_node(1.0, 1.0);
  n1.links[2] = {Matrix::Identity(1, 1), Matrix::Constant(1, 1, std::sqrt(u - z)), Matrix::Constant(1, 1, z)};
  const Network net = build_network(scalar_plant(-1.0, 1.0), {n1, n2}, {{1, 2}});
  const CouplingMatrices cm = coupling_matrices(net);
  EXPECT_NEAR(cm.Delta(0, 0), 1.0 / u, 1e-15);
  EXPECT_NEAR(cm.Ltilde(0, 0), z / (u * u), 1e-15);
  EXPECT_NEAR(cm.Ltilde(0, 1), -1.0 / u, 1e-15);
  EXPECT_EQ(cm.Ltilde.row(1).norm(), 0.0);
  EXPECT_EQ(cm.Delta(1, 1), 0.0);
}

TEST(Model, RejectsSelfLoop) {
  NodeModel n1 = scalar_node(1.0, 1.0);
  n1.links[1] = {Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  try {
    build_network(scalar_plant(1.0, 1.0), {n1}, {{1, 1}});
    FAIL();
  } catch (const SelfLoop& e) {
    EXPECT_EQ(e.node(), 1);
  }
}

TEST(Model, RejectsTopologyAndShapeErrors) {
  const NeighborLink link{Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  NodeModel a = scalar_node(1.0, 1.0), b = scalar_node(1.0, 1.0);
  a.links[2] = link;
  EXPECT_EQ(code_of([&] { build_network(scalar_plant(1, 1), {a, b}, {{1, 3}}); }), ErrorCode::InvalidTopology);
  EXPECT_EQ(code_of([&] { build_network(scalar_plant(1, 1), {a, b}, {{1, 2}, {1, 2}}); }),
            ErrorCode::InvalidTopology);
  // link keyed by a node that does not send
  EXPECT_EQ(code_of([&] { build_network(scalar_plant(1, 1), {a, b}, {}); }), ErrorCode::InvalidTopology);

  NodeModel wide = b;
  wide.C = Matrix::Ones(1, 2);
  EXPECT_EQ(code_of([&] { build_network(scalar_plant(1, 1), {a, wide}, {{1, 2}}); }),
            ErrorCode::DimensionMismatch);
}

TEST(Model, RejectsSingularNoiseMaps) {
  NodeModel silent = scalar_node(1.0, 0.0);
  try {
    build_network(scalar_plant(1, 1), {silent}, {});
    FAIL();
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.which(), "R_1");
  }
  NodeModel a = scalar_node(1.0, 1.0), b = scalar_node(1.0, 1.0);
  a.links[2] = {Matrix::Identity(1, 1), Matrix::Zero(1, 1), Matrix::Identity(1, 1)};
  try {
    build_network(scalar_plant(1, 1), {a, b}, {{1, 2}});
    FAIL();
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.which(), "S_1,2");
  }
}

TEST(Model, GlobalAssemblyRequiresDefiniteM) {
  const Scenario s = make_chua_scenario(1);
  std::vector<Matrix> M(5, Matrix::Identity(3, 3));
  const GlobalMatrices gm = assemble_global(s.network, M);
  EXPECT_EQ(gm.Minv.rows(), 15);
  EXPECT_LE((gm.Minv - Matrix::Identity(15, 15)).norm(), 1e-15);
  M[2](1, 1) = -1.0;
  try {
    assemble_global(s.network, M);
    FAIL();
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.which(), "M_3");
  }
}

TEST(Model, BruteForceLaplacianAgreesWithCoupling) {
  // Off-diagonal blocks of L~ carry -W^T U^-1 W exactly where the Laplacian has -1.
  const Scenario s = make_chua_scenario(1);
  const CouplingMatrices cm = coupling_matrices(s.network);
  const Matrix L = oracle::laplacian(5, s.network.edges());
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i == j) continue;
      const double block = cm.Ltilde.block(3 * i, 3 * j, 3, 3).norm();
      EXPECT_EQ(block != 0.0, L(i, j) != 0.0) << i << "," << j;
    }
  }
}
