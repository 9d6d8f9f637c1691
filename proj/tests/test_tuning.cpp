#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "dmef/error.hpp"
#include "dmef/sim.hpp"
#include "dmef/tuning.hpp"
#include "oracles.hpp"

using namespace dmef;

namespace {

Network chua() { return make_chua_scenario(1).network; }

Matrix chua_P(const Network& net) { return laplacian_P(net, Matrix::Identity(3, 3), 0.01); }

}  // namespace

TEST(Tuning, LaplaciansMatchBruteForce) {
  const Network net = chua();
  EXPECT_EQ(laplacian(net), oracle::laplacian(5, net.edges()));
  std::vector<std::pair<int, int>> reversed;
  for (const auto& [i, j] : net.edges()) reversed.emplace_back(j, i);
  EXPECT_EQ(reversed_laplacian(net), oracle::laplacian(5, reversed));
  EXPECT_LE(laplacian(net).rowwise().sum().norm(), 0.0);
}

TEST(Tuning, LaplacianWeightingIsConsensusCost) {
  const Network net = chua();
  std::mt19937_64 rng(3);
  const Matrix P0 = oracle::random_spd(rng, 3);
  const Matrix P = laplacian_P(net, P0, 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector e = oracle::random_matrix(rng, 15, 1);
    double direct = 0.0;
    for (const auto& [i, j] : net.edges()) {
      const Vector d = e.segment(3 * (i - 1), 3) - e.segment(3 * (j - 1), 3);
      direct += 0.5 * d.dot(P0 * d);
    }
    EXPECT_NEAR(e.dot(P * e), direct, 1e-12 * (1.0 + direct));
  }
  // a common offset is invisible
  const Vector ones = Vector::Ones(15);
  EXPECT_NEAR(ones.dot(P * ones), 0.0, 1e-12);
}

TEST(Tuning, CouplingMarginOnTwoNodes) {
  NodeModel a, b;
  for (NodeModel* node : {&a, &b}) {
    node->C = Matrix::Identity(1, 1);
    node->D = Matrix::Identity(1, 1);
    node->xi = Vector::Zero(1);
    node->Xcal = Matrix::Identity(1, 1);
  }
  const double u = 2.0, z = 0.5;
  a.links[2] = {Matrix::Identity(1, 1), Matrix::Constant(1, 1, std::sqrt(u - z)), Matrix::Constant(1, 1, z)};
  const Network net = build_network({Matrix::Constant(1, 1, -1.0), Matrix::Identity(1, 1)}, {a, b}, {{1, 2}});
  const CouplingMatrices cm = coupling_matrices(net);
  const Matrix P = Matrix::Zero(2, 2);
  const std::vector<Matrix> Minv{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0)};
  // diag(1, 2) + [[2 z/u^2 - z/u^2, -1/u], [-1/u, 0]]
  Matrix expected(2, 2);
  expected << 1.0 + z / (u * u), -1.0 / u, -1.0 / u, 2.0;
  EXPECT_NEAR(check_minv(cm, Minv, P), Eigen::SelfAdjointEigenSolver<Matrix>(expected).eigenvalues()(0), 1e-14);

  const std::vector<Matrix> singular{Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1)};
  EXPECT_THROW(check_minv(cm, singular, P), NotPositiveDefinite);
}

TEST(Tuning, NodeCertificateSatisfiesRiccatiInequality) {
  const Network net = chua();
  const NodeLmiData data = node_lmi_data(net, 1);
  const Matrix Minv = 1.0 * Matrix::Identity(3, 3);
  const auto cert = node_feasible(data, Minv, 0.1);
  ASSERT_TRUE(cert.has_value());
  EXPECT_LT(cert->lmi_margin, -1e-10);
  // Schur complement of the LMI at X equals -strictness I
  const Matrix& X = cert->X;
  const Matrix schur = data.A.transpose() * X + X * data.A - data.Ct_Rinv_C - data.Delta_ii + Minv +
                       X * data.B * data.B.transpose() * X;
  EXPECT_LE((schur + 0.1 * Matrix::Identity(3, 3)).norm(), 1e-8 * (1.0 + X.squaredNorm()));
  EXPECT_NEAR(node_lmi_margin(data, Minv, X), cert->lmi_margin, 1e-14);
}

TEST(Tuning, PerNodeSearchOnChua) {
  const Network net = chua();
  const Matrix P = chua_P(net);
  const TuningResult r = tune_scalar(net, P);
  ASSERT_EQ(r.mu.size(), 5u);
  EXPECT_GT(r.minv_margin, 0.0);
  EXPECT_GT(r.theta, std::max(r.theta_lo, 0.0));
  EXPECT_LT(r.theta, 1.0);
  // nodes 2 and 5 see identical data
  EXPECT_DOUBLE_EQ(r.mu_max[1], r.mu_max[4]);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(r.mu[k], r.theta * r.mu_max[k], 1e-12 * r.mu[k]);
    EXPECT_LT(r.certificates[k].lmi_margin, -1e-10);
    const NodeLmiData data = node_lmi_data(net, static_cast<int>(k) + 1);
    // boundary: just inside admits a certificate, just outside does not
    EXPECT_TRUE(node_feasible(data, r.mu_max[k] * (1.0 - 1e-4) * Matrix::Identity(3, 3)).has_value());
    EXPECT_FALSE(node_feasible(data, r.mu_max[k] * (1.0 + 1e-4) * Matrix::Identity(3, 3)).has_value());
  }
  // the coupling bound is the largest eigenvalue of P - L~ - L~^T + Delta~
  const CouplingMatrices cm = coupling_matrices(net);
  const Matrix X = P - cm.Ltilde - cm.Ltilde.transpose() + cm.DeltaTilde;
  EXPECT_NEAR(r.mu_lo, Eigen::SelfAdjointEigenSolver<Matrix>(X).eigenvalues().maxCoeff(), 1e-10);

  std::vector<Matrix> X_blocks;
  for (const auto& c : r.certificates) X_blocks.push_back(c.X);
  const CertificateCheck check = verify_certificates(net, P, r.Minv, X_blocks);
  EXPECT_TRUE(check.valid);
  EXPECT_NEAR(check.minv_margin, r.minv_margin, 1e-10);
}

TEST(Tuning, BoundaryHamiltonianLeavesTheAxis) {
  // Independent view of the boundary: below it the Hamiltonian of the node
  // ARE has no eigenvalue on the imaginary axis.
  const Network net = chua();
  const TuningResult r = tune_scalar(net, chua_P(net));
  for (int i = 1; i <= 5; ++i) {
    const NodeLmiData d = node_lmi_data(net, i);
    const double mu = 0.5 * r.mu_max[i - 1];
    const Matrix S = d.Ct_Rinv_C + d.Delta_ii - mu * Matrix::Identity(3, 3);
    Matrix H(6, 6);
    H << d.A.transpose(), -S, -d.B * d.B.transpose(), -d.A;
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(H).eigenvalues();
    EXPECT_GT(ev.real().cwiseAbs().minCoeff(), 1e-6);
  }
}

TEST(Tuning, UniformScalingIsInfeasibleOnChua) {
  const Network net = chua();
  TuneOptions opt;
  opt.mode = ScalarMode::uniform;
  try {
    tune_scalar(net, chua_P(net), opt);
    FAIL();
  } catch (const Infeasible& e) {
    EXPECT_GT(e.mu_lo(), e.mu_hi());
  }
}

TEST(Tuning, HugeWeightingIsInfeasible) {
  const Network net = chua();
  EXPECT_THROW(tune_scalar(net, 1e6 * chua_P(net)), Infeasible);
}

TEST(Tuning, ReverificationRejectsWeakenedBlocks) {
  const Network net = chua();
  const Matrix P = chua_P(net);
  const TuningResult r = tune_scalar(net, P);
  std::vector<Matrix> X_blocks;
  for (const auto& c : r.certificates) X_blocks.push_back(c.X);
  std::vector<Matrix> weak = r.Minv;
  for (Matrix& m : weak) m *= 0.1;
  EXPECT_FALSE(verify_certificates(net, P, weak, X_blocks).valid);
  std::vector<Matrix> strong = r.Minv;
  strong[0] *= 2.0;  // beyond node 1's boundary
  EXPECT_FALSE(verify_certificates(net, P, strong, X_blocks).valid);
}
