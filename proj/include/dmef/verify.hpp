#pragma once

#include <map>
#include <string>
#include <vector>

#include "dmef/linalg.hpp"
#include "dmef/model.hpp"
#include "dmef/rk4.hpp"
#include "dmef/sim.hpp"

namespace dmef {

/// Composite trapezoid of e(t)^T P e(t) for e given column-wise on `grid`.
double lhs_cost(const Matrix& e, const TimeGrid& grid, const Matrix& P);
/// Same on the stacked error of a run.
double lhs_cost(const Trajectories& traj, const Matrix& P);

struct Budget {
  double initial = 0.0;        // sum_i ||x0 - xi_i||^2 in Xcal_i
  double model = 0.0;          // N ||w||^2
  double measurement = 0.0;    // sum_i ||v_i||^2
  double communication = 0.0;  // sum_i sum_j ||eps_ij||^2

  double total() const { return initial + model + measurement + communication; }
};

/// Right side of the attenuation inequality from the recorded disturbance
/// samples. Pulse and held signals are exactly square-integrable, so the
/// trapezoid matches the closed form of the realization.
Budget rhs_budget(const Network& net, const Trajectories& traj);

/// Closed-form budget of the realization itself (no quadrature).
Budget rhs_budget_exact(const Network& net, const Trajectories& traj);

struct HinfReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  Budget budget;
  bool hypotheses_verified = false;
  std::vector<std::string> warnings;
};

/// lhs, rhs and slack over [0, T]. Warns when the run metadata does not
/// establish the stability hypotheses (coupling margin > 0, gains PD).
HinfReport check_hinf(const Network& net, const Trajectories& traj, const Matrix& P);

/// 1/2 sum_i sum_{j in N_i} trapezoid of ||xhat_i - xhat_j||^2 in P0.
double consensus_cost(const Network& net, const Trajectories& traj, const Matrix& P0);
double consensus_cost(const Network& net, const std::vector<Matrix>& xhat, const TimeGrid& grid,
                      const Matrix& P0);

/// Data available to one node, sampled on the run grid.
struct NodeObservations {
  TimeGrid grid;
  Matrix y;                  // p x (steps+1)
  std::map<int, Matrix> c;   // per neighbor, m x (steps+1)
  Matrix xhat;               // n x (steps+1)
};

/// Observations of node `id` in a run, with one-sided disturbance samples
/// taken from the right except at the final time.
NodeObservations node_observations(const Network& net, const Trajectories& traj, int id);

/// Candidate unknowns of the node energy cost.
struct EnergyCandidate {
  Vector x0;
  Matrix w;                    // q x (steps+1)
  std::map<int, Matrix> eta;   // per neighbor, n x (steps+1)
};

/// Node energy cost J_{i,T}, including the negative ||x - xhat_i||^2 term in
/// M_i^-1. x follows xdot = A x + B w from x0, integrated with RK4 and w
/// interpolated linearly between samples. Trapezoid in time.
double energy_cost(const Network& net, int id, const Matrix& Minv, const NodeObservations& obs,
                   const EnergyCandidate& candidate);

}  // namespace dmef
