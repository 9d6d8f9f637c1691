#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dmef/linalg.hpp"
#include "dmef/model.hpp"
#include "dmef/riccati.hpp"

namespace dmef {

/// Graph Laplacian with in-neighbor degrees: row i has |N_i| on the diagonal
/// and -1 at every j in N_i.
Matrix laplacian(const Network& net);
/// Laplacian of the edge-reversed graph.
Matrix reversed_laplacian(const Network& net);

/// 1/2 (L + L_T) (x) P0 + ridge I.
Matrix laplacian_P(const Network& net, const Matrix& P0, double ridge);

/// lambda_min(diag(M_i^-1) - P + L~ + L~^T - Delta~); positive iff the
/// network coupling condition holds strictly. Every M_i^-1 must be PD.
double check_minv(const CouplingMatrices& cm, std::span<const Matrix> Minv_blocks, const Matrix& P);

/// Data of the node LMI
///   [[A^T X + X A - C^T R^-1 C - [Delta]_ii + M^-1, X B], [B^T X, -I]] < 0.
struct NodeLmiData {
  Matrix A;
  Matrix B;
  Matrix Ct_Rinv_C;
  Matrix Delta_ii;
};

NodeLmiData node_lmi_data(const Network& net, int id);

struct NodeCertificate {
  int node = 0;
  Matrix X;                  // LMI witness, (Z+)^-1 of the tightened ARE
  double lmi_margin = 0.0;   // lambda_max of the LMI block at X; < 0
  double strictness = 0.0;   // M^-1 was tightened by this multiple of I
  AreSolution are;
};

/// Decides the node LMI through the Riccati inequality it is equivalent to.
/// The ARE is solved with M^-1 + strictness * I so that X = (Z+)^-1 makes
/// the Schur complement exactly -strictness * I. Returns nullopt when that
/// ARE has no stabilizing PD solution or the evaluated margin is not below
/// -1e-10. strictness <= 0 picks 1e-6 (1 + ||M^-1||_F).
/// Throws NotStabilizable if (A, B) is not stabilizable.
std::optional<NodeCertificate> node_feasible(const NodeLmiData& data, const Matrix& Minv,
                                             double strictness = 0.0);

/// lambda_max of the node LMI block at (X, M^-1), evaluated directly.
double node_lmi_margin(const NodeLmiData& data, const Matrix& Minv, const Matrix& X);

enum class ScalarMode {
  uniform,   // M_i^-1 = mu I for one mu shared by all nodes
  per_node,  // M_i^-1 = theta * mu_i_max I for one shared theta
};

struct TuneOptions {
  ScalarMode mode = ScalarMode::per_node;
  double rel_tol = 1e-6;       // bisection tolerance on mu
  double margin_floor = 1e-10;
  double mu_cap = 1e8;
};

struct TuningResult {
  ScalarMode mode = ScalarMode::per_node;
  std::vector<double> mu;        // M_i^-1 = mu_i I
  std::vector<Matrix> Minv;
  Matrix P;
  double minv_margin = 0.0;
  double mu_lo = 0.0;            // lambda_max(P - L~ - L~^T + Delta~)
  std::vector<double> mu_max;    // per-node ARE feasibility boundary
  double theta_lo = 0.0;
  double theta = 0.0;
  std::vector<NodeCertificate> certificates;
};

/// Scalarized search for M with certified margins on both the coupling
/// condition and every node LMI. Throws Infeasible(mu_lo, mu_hi) when no
/// admissible scaling exists, NotStabilizable if (A, B) is not.
TuningResult tune_scalar(const Network& net, const Matrix& P, const TuneOptions& options = {});

/// Re-verification of externally supplied (M^-1, X, P) along a code path
/// separate from the search: explicit matrices and direct eigenvalues.
struct CertificateCheck {
  double minv_margin = 0.0;
  std::vector<double> node_margins;
  bool valid = false;
};

CertificateCheck verify_certificates(const Network& net, const Matrix& P,
                                     std::span<const Matrix> Minv_blocks,
                                     std::span<const Matrix> X_blocks, double margin_floor = 1e-10);

/// Tuning inputs as stored with a scenario.
struct TuningConfig {
  Matrix P0;            // n x n; empty means identity
  double ridge = 0.0;
  Matrix P;             // explicit nN x nN weighting; overrides P0/ridge
  ScalarMode mode = ScalarMode::per_node;

  Matrix weighting(const Network& net) const;
  bool operator==(const TuningConfig& o) const {
    return same(P0, o.P0) && ridge == o.ridge && same(P, o.P) && mode == o.mode;
  }
};

}  // namespace dmef
