#include "dmef/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dmef/error.hpp"

namespace dmef {

Matrix laplacian(const Network& net) {
  const int N = net.size();
  Matrix L = Matrix::Zero(N, N);
  for (const auto& [i, j] : net.edges()) {
    L(i - 1, i - 1) += 1.0;
    L(i - 1, j - 1) -= 1.0;
  }
  return L;
}

Matrix reversed_laplacian(const Network& net) {
  const int N = net.size();
  Matrix L = Matrix::Zero(N, N);
  for (const auto& [i, j] : net.edges()) {
    L(j - 1, j - 1) += 1.0;
    L(j - 1, i - 1) -= 1.0;
  }
  return L;
}

Matrix laplacian_P(const Network& net, const Matrix& P0, double ridge) {
  const Index n = net.state_dim();
  require_shape(P0, n, n, "P0");
  require_positive_semidefinite(P0, "P0");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  const Matrix sym_lap = 0.5 * (laplacian(net) + reversed_laplacian(net));
  Matrix P = kron(sym_lap, symmetrize(P0));
  P.diagonal().array() += ridge;
  return symmetrize(P);
}

namespace {

Matrix minv_condition(const CouplingMatrices& cm, const Matrix& Minv, const Matrix& P) {
  return symmetrize(Minv - P + cm.Ltilde + cm.Ltilde.transpose() - cm.DeltaTilde);
}

void require_weighting(const Matrix& P, Index size) {
  require_shape(P, size, size, "P");
  require_symmetric(P, "P");
}

bool are_feasible(const NodeLmiData& data, double mu) {
  const Index n = data.A.rows();
  const Matrix S = symmetrize(data.Ct_Rinv_C + data.Delta_ii - mu * Matrix::Identity(n, n));
  try {
    solve_are_stabilizing(data.A, data.B, S);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoStabilizingSolution) return false;
    throw;
  }
}

// Supremum of mu > 0 keeping the node ARE solvable, or 0 if none.
double node_mu_boundary(const NodeLmiData& data, const TuneOptions& opt) {
  const double scale = 1.0 + (data.Ct_Rinv_C + data.Delta_ii).norm();
  const double tiny = 1e-12 * scale;
  if (!are_feasible(data, tiny)) return 0.0;
  double lo = tiny;
  double hi = scale;
  while (are_feasible(data, hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > opt.mu_cap) return lo;
  }
  while (hi - lo > opt.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (are_feasible(data, mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

double check_minv(const CouplingMatrices& cm, std::span<const Matrix> Minv_blocks, const Matrix& P) {
  const Index total = cm.Ltilde.rows();
  const Index n = Minv_blocks.empty() ? 0 : total / static_cast<Index>(Minv_blocks.size());
  if (n * static_cast<Index>(Minv_blocks.size()) != total) {
    throw Error(ErrorCode::DimensionMismatch, "M block count does not match the network");
  }
  for (std::size_t i = 0; i < Minv_blocks.size(); ++i) {
    const std::string label = "M_" + std::to_string(i + 1) + "^-1";
    require_shape(Minv_blocks[i], n, n, label);
    require_positive_definite(Minv_blocks[i], label);
  }
  require_weighting(P, total);
  return min_eigenvalue(minv_condition(cm, block_diagonal(Minv_blocks), P));
}

NodeLmiData node_lmi_data(const Network& net, int id) {
  const NodeDerived& d = net.derived(id);
  return NodeLmiData{net.plant().A, net.plant().B, d.Ct_Rinv_C, d.Delta};
}

double node_lmi_margin(const NodeLmiData& data, const Matrix& Minv, const Matrix& X) {
  const Index n = data.A.rows();
  const Index q = data.B.cols();
  Matrix lmi(n + q, n + q);
  lmi.topLeftCorner(n, n) =
      data.A.transpose() * X + X * data.A - data.Ct_Rinv_C - data.Delta_ii + Minv;
  lmi.topRightCorner(n, q) = X * data.B;
  lmi.bottomLeftCorner(q, n) = data.B.transpose() * X;
  lmi.bottomRightCorner(q, q) = -Matrix::Identity(q, q);
  return max_eigenvalue(lmi);
}

std::optional<NodeCertificate> node_feasible(const NodeLmiData& data, const Matrix& Minv,
                                             double strictness) {
  const Index n = data.A.rows();
  require_shape(Minv, n, n, "M^-1");
  require_symmetric(Minv, "M^-1");
  if (!is_stabilizable(data.A, data.B)) throw Error(ErrorCode::NotStabilizable, "(A, B)");
  if (!(strictness > 0.0)) strictness = 1e-6 * (1.0 + Minv.norm());

  const Matrix S = symmetrize(data.Ct_Rinv_C + data.Delta_ii - Minv - strictness * Matrix::Identity(n, n));
  NodeCertificate cert;
  try {
    cert.are = solve_are_stabilizing(data.A, data.B, S);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoStabilizingSolution) return std::nullopt;
    throw;
  }
  cert.X = symmetrize(cert.are.Zplus.llt().solve(Matrix::Identity(n, n)));
  cert.strictness = strictness;
  cert.lmi_margin = node_lmi_margin(data, Minv, cert.X);
  if (!(cert.lmi_margin < -1e-10)) return std::nullopt;
  return cert;
}

TuningResult tune_scalar(const Network& net, const Matrix& P, const TuneOptions& opt) {
  const Index n = net.state_dim();
  const int N = net.size();
  require_weighting(P, n * N);
  require_positive_semidefinite(P, "P");
  if (!is_stabilizable(net.plant().A, net.plant().B)) throw Error(ErrorCode::NotStabilizable, "(A, B)");

  const CouplingMatrices cm = coupling_matrices(net);
  // P - L~ - L~^T + Delta~; the coupling condition reads diag(M_i^-1) > X.
  const Matrix X = -minv_condition(cm, Matrix::Zero(n * N, n * N), P);

  TuningResult result;
  result.mode = opt.mode;
  result.P = P;
  result.mu_lo = max_eigenvalue(X);

  std::vector<NodeLmiData> data;
  for (int i = 1; i <= N; ++i) {
    data.push_back(node_lmi_data(net, i));
    result.mu_max.push_back(node_mu_boundary(data.back(), opt));
  }
  const double min_boundary = *std::min_element(result.mu_max.begin(), result.mu_max.end());
  const double max_boundary = *std::max_element(result.mu_max.begin(), result.mu_max.end());
  const double mu_hi = opt.mode == ScalarMode::uniform ? min_boundary : max_boundary;

  for (int i = 1; i <= N; ++i) {
    if (result.mu_max[static_cast<std::size_t>(i - 1)] <= 0.0) {
      throw Infeasible(result.mu_lo, mu_hi,
                       "node " + std::to_string(i) + " admits no M_i^-1 = mu I with mu > 0");
    }
  }

  std::vector<double> base(result.mu_max);
  if (opt.mode == ScalarMode::uniform) std::fill(base.begin(), base.end(), min_boundary);

  // Coupling condition under M_i^-1 = theta base_i I holds iff theta exceeds
  // lambda_max(D^-1/2 X D^-1/2), D = diag(base_i I).
  Vector scale(n * N);
  for (int i = 0; i < N; ++i) scale.segment(n * i, n).setConstant(1.0 / std::sqrt(base[static_cast<std::size_t>(i)]));
  result.theta_lo = max_eigenvalue(scale.asDiagonal() * X * scale.asDiagonal());

  const double floor = std::max(result.theta_lo, 0.0) + 1e-9 * (1.0 + std::abs(result.theta_lo));
  if (floor >= 1.0) {
    std::ostringstream os;
    os << (opt.mode == ScalarMode::uniform ? "uniform" : "per-node")
       << " scaling cannot satisfy the coupling condition and the node LMIs together (theta_lo="
       << result.theta_lo << ")";
    throw Infeasible(result.mu_lo, mu_hi, os.str());
  }
  result.theta = 0.5 * (std::max(result.theta_lo, 0.0) + 1.0);

  for (int i = 0; i < N; ++i) {
    const double mu = result.theta * base[static_cast<std::size_t>(i)];
    result.mu.push_back(mu);
    result.Minv.push_back(mu * Matrix::Identity(n, n));
  }
  result.minv_margin = check_minv(cm, result.Minv, P);
  if (!(result.minv_margin > opt.margin_floor)) {
    throw Infeasible(result.mu_lo, mu_hi, "coupling margin " + std::to_string(result.minv_margin));
  }

  for (int i = 1; i <= N; ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    const double strictness = 0.5 * (result.mu_max[k] - result.mu[k]);
    auto cert = node_feasible(data[k], result.Minv[k], strictness);
    if (!cert || !(cert->lmi_margin < -opt.margin_floor)) {
      throw Infeasible(result.mu_lo, mu_hi, "node " + std::to_string(i) + " LMI certificate failed");
    }
    cert->node = i;
    result.certificates.push_back(std::move(*cert));
  }
  return result;
}

CertificateCheck verify_certificates(const Network& net, const Matrix& P,
                                     std::span<const Matrix> Minv_blocks,
                                     std::span<const Matrix> X_blocks, double margin_floor) {
  const Index n = net.state_dim();
  const int N = net.size();
  if (static_cast<int>(Minv_blocks.size()) != N || static_cast<int>(X_blocks.size()) != N) {
    throw Error(ErrorCode::DimensionMismatch, "certificate block count does not match the network");
  }
  require_weighting(P, n * N);

  const CouplingMatrices cm = coupling_matrices(net);
  Matrix condition = block_diagonal(Minv_blocks) - P + cm.Ltilde + cm.Ltilde.transpose() - cm.DeltaTilde;
  CertificateCheck check;
  check.minv_margin = min_eigenvalue(condition);
  check.valid = check.minv_margin > 0.0;
  for (int i = 1; i <= N; ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    const double margin = node_lmi_margin(node_lmi_data(net, i), Minv_blocks[k], X_blocks[k]);
    check.node_margins.push_back(margin);
    check.valid = check.valid && margin < -margin_floor && is_positive_definite(X_blocks[k]) &&
                  is_positive_definite(Minv_blocks[k]);
  }
  return check;
}

Matrix TuningConfig::weighting(const Network& net) const {
  const Index size = net.state_dim() * net.size();
  if (P.size() != 0) {
    require_weighting(P, size);
    return P;
  }
  const Matrix p0 = P0.size() == 0 ? Matrix::Identity(net.state_dim(), net.state_dim()) : P0;
  return laplacian_P(net, p0, ridge);
}

}  // namespace dmef
