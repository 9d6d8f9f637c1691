#include "dmef/riccati.hpp"

#include <complex>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dmef/error.hpp"

namespace dmef {

namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

void check_gain(const Matrix& K, double t, int node) {
  if (!K.allFinite()) throw NonFinite("gain of node " + std::to_string(node), t);
  const double lmin = min_eigenvalue(K);
  if (!(lmin > kDefinitenessTol * (1.0 + K.norm()))) throw LostPositivity(node, t, lmin);
}

// LAPACK zlartg: real c, complex s with [c s; -conj(s) c] [f; g] = [r; 0].
void make_givens(Complex f, Complex g, double& c, Complex& s) {
  const double af = std::abs(f);
  const double ag = std::abs(g);
  if (ag == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (af == 0.0) {
    c = 0.0;
    s = std::conj(g) / ag;
  } else {
    const double d = std::hypot(af, ag);
    c = af / d;
    s = (f / af) * std::conj(g) / d;
  }
}

// x <- c x + s y, y <- c y - conj(s) x
template <class X, class Y>
void rotate(X&& x, Y&& y, double c, Complex s) {
  for (Index k = 0; k < x.size(); ++k) {
    const Complex xk = x(k);
    const Complex yk = y(k);
    x(k) = c * xk + s * yk;
    y(k) = c * yk - std::conj(s) * xk;
  }
}

// Swap diagonal entries k and k+1 of the upper triangular T, updating the
// Schur vectors so that Q T Q^H is preserved (ztrexc).
void swap_adjacent(CMatrix& T, CMatrix& Q, Index k) {
  const Index n = T.rows();
  const Complex t11 = T(k, k);
  const Complex t22 = T(k + 1, k + 1);
  double c = 0.0;
  Complex s;
  make_givens(T(k, k + 1), t22 - t11, c, s);
  if (k + 2 < n) {
    rotate(T.row(k).tail(n - k - 2), T.row(k + 1).tail(n - k - 2), c, s);
  }
  rotate(T.col(k).head(k), T.col(k + 1).head(k), c, std::conj(s));
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  rotate(Q.col(k), Q.col(k + 1), c, std::conj(s));
}

// Moves every diagonal entry with negative real part to the leading block.
Index order_stable_first(CMatrix& T, CMatrix& Q) {
  const Index n = T.rows();
  Index placed = 0;
  for (Index j = 0; j < n; ++j) {
    if (T(j, j).real() < 0.0) {
      for (Index k = j; k > placed; --k) swap_adjacent(T, Q, k - 1);
      ++placed;
    }
  }
  return placed;
}

}  // namespace

RiccatiCoefficients node_riccati_coefficients(const Network& net, int id, const Matrix& Minv) {
  const Index n = net.state_dim();
  require_shape(Minv, n, n, "M_" + std::to_string(id) + "^-1");
  const NodeDerived& d = net.derived(id);
  return RiccatiCoefficients{net.plant().A, net.Q(), symmetrize(d.Ct_Rinv_C + d.Delta - Minv)};
}

Matrix riccati_rhs(const Matrix& K, const RiccatiCoefficients& c) {
  const Matrix AtK = c.A.transpose() * K;
  return symmetrize(-K * c.Q * K + c.S - AtK - AtK.transpose());
}

GainTrajectory integrate_riccati(const RiccatiCoefficients& coeffs, const Matrix& K0,
                                 const TimeGrid& grid, int node) {
  const Index n = coeffs.A.rows();
  require_shape(K0, n, n, "K0");
  require_positive_definite(K0, "K0");

  GainTrajectory out{grid, {}};
  out.K.reserve(grid.steps + 1);
  Matrix K = symmetrize(K0);
  out.K.push_back(K);
  const auto f = [&coeffs](double, StageSide, const Matrix& k) { return riccati_rhs(k, coeffs); };
  for (std::size_t step = 0; step < grid.steps; ++step) {
    K = symmetrize(rk4_step(K, grid.at(step), grid.dt, f));
    check_gain(K, grid.at(step + 1), node);
    out.K.push_back(K);
  }
  return out;
}

GainTrajectory integrate_global_riccati(const Network& net, const GlobalMatrices& gm,
                                        std::span<const Matrix> K0_blocks, const TimeGrid& grid) {
  const int N = net.size();
  if (static_cast<int>(K0_blocks.size()) != N) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(N) + " K0 blocks");
  }
  const Matrix I_N = Matrix::Identity(N, N);
  RiccatiCoefficients stacked;
  stacked.A = kron(I_N, net.plant().A);
  stacked.Q = kron(I_N, net.Q());
  const Matrix Ct_Rinv_C = gm.C.transpose() * gm.R.llt().solve(gm.C);
  stacked.S = symmetrize(Ct_Rinv_C + gm.coupling.Delta - gm.Minv);
  return integrate_riccati(stacked, block_diagonal(K0_blocks), grid);
}

bool is_stabilizable(const Matrix& A, const Matrix& B, double rel_tol) {
  const Index n = A.rows();
  Eigen::EigenSolver<Matrix> eig(A, false);
  for (Index k = 0; k < n; ++k) {
    const Complex lambda = eig.eigenvalues()(k);
    if (lambda.real() < 0.0) continue;
    CMatrix pencil(n, n + B.cols());
    pencil.leftCols(n) = A.cast<Complex>() - lambda * CMatrix::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const auto& sv = svd.singularValues();
    if (sv(0) == 0.0 || sv(n - 1) < rel_tol * sv(0)) return false;
  }
  return true;
}

AreSolution solve_are_stabilizing(const Matrix& A, const Matrix& B, const Matrix& S) {
  const Index n = A.rows();
  require_shape(A, n, n, "A");
  if (B.rows() != n) throw Error(ErrorCode::DimensionMismatch, "B row count differs from A");
  require_shape(S, n, n, "S");
  require_symmetric(S, "S");
  if (!is_stabilizable(A, B)) throw Error(ErrorCode::NotStabilizable, "(A, B)");

  const Matrix Q = symmetrize(B * B.transpose());
  Matrix H(2 * n, 2 * n);
  H << A.transpose(), -S, -Q, -A;

  Eigen::ComplexSchur<CMatrix> schur(H.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::NoStabilizingSolution, "Schur decomposition did not converge");
  }
  CMatrix T = schur.matrixT();
  CMatrix U = schur.matrixU();

  const double axis_tol = 1e-9 * H.norm();
  for (Index k = 0; k < 2 * n; ++k) {
    if (std::abs(T(k, k).real()) < axis_tol) {
      throw Error(ErrorCode::NoStabilizingSolution, "Hamiltonian eigenvalue on the imaginary axis");
    }
  }
  if (order_stable_first(T, U) != n) {
    throw Error(ErrorCode::NoStabilizingSolution, "stable subspace has wrong dimension");
  }

  const CMatrix U11 = U.topLeftCorner(n, n);
  const CMatrix U21 = U.bottomLeftCorner(n, n);
  Eigen::JacobiSVD<CMatrix> svd(U11);
  const auto& sv = svd.singularValues();
  if (sv(n - 1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::NoStabilizingSolution, "stable subspace basis is singular");
  }
  // Z U11 = U21
  const CMatrix Zc = U11.transpose().fullPivLu().solve(U21.transpose()).transpose();
  const Matrix Z = symmetrize(Zc.real());
  if (Zc.imag().norm() > 1e-8 * (1.0 + Z.norm())) {
    throw Error(ErrorCode::NoStabilizingSolution, "solution is not real");
  }

  AreSolution sol;
  sol.Zplus = Z;
  sol.residual = (Z * A.transpose() + A * Z - Z * S * Z + Q).norm();
  sol.closed_loop_spectral_abscissa = spectral_abscissa((A - Z * S).transpose());

  if (!is_positive_definite(Z)) {
    throw Error(ErrorCode::NoStabilizingSolution,
                "Z+ not positive definite (min eigenvalue " + std::to_string(min_eigenvalue(Z)) + ")");
  }
  if (!(sol.residual <= 1e-8 * (1.0 + Z.squaredNorm()))) {
    throw Error(ErrorCode::NoStabilizingSolution, "residual " + std::to_string(sol.residual));
  }
  if (!(sol.closed_loop_spectral_abscissa < 0.0)) {
    throw Error(ErrorCode::NoStabilizingSolution, "closed loop is not Hurwitz");
  }
  return sol;
}

LimitReport verify_prop1_limit(const GainTrajectory& traj, const AreSolution& are,
                               bool require_dominance) {
  if (traj.K.empty()) throw Error(ErrorCode::InvalidArgument, "empty gain trajectory");
  const Index n = are.Zplus.rows();
  require_shape(traj.K.front(), n, n, "K");
  const Matrix Kinf = symmetrize(are.Zplus.llt().solve(Matrix::Identity(n, n)));

  LimitReport report;
  report.initial_dominance = min_eigenvalue(traj.K.front() - Kinf);
  report.initial_dominates = report.initial_dominance >= -1e-10;
  if (require_dominance && !report.initial_dominates) {
    throw Error(ErrorCode::PreconditionViolated,
                "K(0) - (Z+)^-1 has eigenvalue " + std::to_string(report.initial_dominance));
  }

  const double scale = Kinf.norm();
  report.gap.reserve(traj.K.size());
  for (std::size_t k = 0; k < traj.K.size(); ++k) {
    report.gap.push_back((traj.K[k] - Kinf).norm() / scale);
    if (k > 0 && report.gap[k] > report.gap[k - 1] * (1.0 + 1e-12) + 1e-15) {
      report.last_increase_time = traj.grid.at(k);
    }
  }
  report.final_gap = report.gap.back();
  return report;
}

}  // namespace dmef
