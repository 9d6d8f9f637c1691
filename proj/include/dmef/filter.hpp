#pragma once

#include <map>

#include <Eigen/Cholesky>

#include "dmef/linalg.hpp"
#include "dmef/model.hpp"

namespace dmef {

/// Per-neighbor signals keyed by sending node id.
using NeighborSignals = std::map<int, Vector>;

/// Applies K^-1 through a Cholesky factorization; K^-1 is never formed.
class GainSolver {
 public:
  /// Throws Error(SingularGain) if K is not numerically positive definite.
  explicit GainSolver(const Matrix& K);
  Vector solve(const Vector& v) const { return llt_.solve(v); }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// Node filter vector field
///   A xhat + K^-1 (C^T R^-1 (y - C xhat) + sum_j W^T U^-1 (c_j - W xhat)).
Vector filter_rhs(const Network& net, int id, const Matrix& K, const Vector& xhat,
                  const Vector& y, const NeighborSignals& c);

/// Node error vector field
///   A e - B w - K^-1 ((C^T R^-1 C + sum_j W^T U^-1 W) e - C^T R^-1 D v
///                     - sum_j W^T U^-1 (W e_j + F eps_j)).
/// Kept as an independent route to the error dynamics for cross-checks.
Vector error_rhs(const Network& net, int id, const Matrix& K, const Vector& e,
                 const NeighborSignals& e_neighbors, const Vector& w, const Vector& v,
                 const NeighborSignals& eps);

/// Plant vector field A x + B w.
Vector plant_rhs(const PlantModel& plant, const Vector& x, const Vector& w);

}  // namespace dmef
