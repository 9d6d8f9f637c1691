#pragma once

#include <span>
#include <vector>

#include "dmef/linalg.hpp"
#include "dmef/model.hpp"
#include "dmef/rk4.hpp"

namespace dmef {

/// Constant coefficients of the node gain equation
///   Kdot = -K Q K + S - A^T K - K A,   S = C^T R^-1 C + [Delta]_ii - M^-1.
struct RiccatiCoefficients {
  Matrix A;
  Matrix Q;
  Matrix S;  // symmetric, possibly indefinite
};

/// Coefficients for node `id` given its M_i^-1 (PSD; zero is allowed here).
RiccatiCoefficients node_riccati_coefficients(const Network& net, int id, const Matrix& Minv);

/// Right side of the gain equation at K, symmetrized.
Matrix riccati_rhs(const Matrix& K, const RiccatiCoefficients& coeffs);

/// Gain samples K(t_k) on a uniform grid.
struct GainTrajectory {
  TimeGrid grid;
  std::vector<Matrix> K;
};

/// RK4 integration from K0. Every accepted state is re-symmetrized and
/// checked: LostPositivity if it leaves the PD cone, NonFinite on overflow.
/// `node` only labels errors.
GainTrajectory integrate_riccati(const RiccatiCoefficients& coeffs, const Matrix& K0,
                                 const TimeGrid& grid, int node = 0);

/// Stacked nN x nN gain equation with A~ = I_N (x) A, Q~ = I_N (x) Q and
/// constant term C^T R^-1 C + Delta - M^-1 taken from gm.
GainTrajectory integrate_global_riccati(const Network& net, const GlobalMatrices& gm,
                                        std::span<const Matrix> K0_blocks, const TimeGrid& grid);

/// Stabilizing solution of Z A^T + A Z - Z S Z + B B^T = 0.
struct AreSolution {
  Matrix Zplus;
  double residual = 0.0;
  /// Of (A - Z+ S)^T; negative for a stabilizing solution.
  double closed_loop_spectral_abscissa = 0.0;
};

/// Rank test on [A - lambda I, B] for every eigenvalue with Re(lambda) >= 0.
bool is_stabilizable(const Matrix& A, const Matrix& B, double rel_tol = 1e-9);

/// Stable invariant subspace of H = [[A^T, -S], [-B B^T, -A]] via an ordered
/// complex Schur form; Z+ = V U^-1.
/// Throws NotStabilizable, or NoStabilizingSolution when H has eigenvalues
/// near the imaginary axis, U is singular, Z+ is not PD, or the residual /
/// closed-loop checks fail.
AreSolution solve_are_stabilizing(const Matrix& A, const Matrix& B, const Matrix& S);

/// Convergence of a gain trajectory to (Z+)^-1.
struct LimitReport {
  double final_gap = 0.0;            // ||K(T) - (Z+)^-1||_F / ||(Z+)^-1||_F
  std::vector<double> gap;           // same quantity at every grid point
  double last_increase_time = 0.0;   // gap is non-increasing after this time
  double initial_dominance = 0.0;    // lambda_min(K(0) - (Z+)^-1)
  bool initial_dominates = false;    // initial_dominance >= -1e-10
};

/// With require_dominance, throws PreconditionViolated unless K(0) >= (Z+)^-1.
LimitReport verify_prop1_limit(const GainTrajectory& traj, const AreSolution& are,
                               bool require_dominance = true);

}  // namespace dmef
