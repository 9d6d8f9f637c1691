#include "dmef/filter.hpp"

#include <string>

#include "dmef/error.hpp"

namespace dmef {

namespace {

const Vector& signal_from(const NeighborSignals& signals, int j, Index expected, int id) {
  const auto it = signals.find(j);
  if (it == signals.end()) {
    throw Error(ErrorCode::MissingNeighborSignal,
                "node " + std::to_string(id) + " has no signal from " + std::to_string(j));
  }
  if (it->second.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch,
                "signal " + std::to_string(id) + "<-" + std::to_string(j) + " has wrong length");
  }
  return it->second;
}

void require_exact_keys(const NeighborSignals& signals, const std::vector<int>& neighbors, int id) {
  for (int j : neighbors) {
    if (!signals.contains(j)) {
      throw Error(ErrorCode::MissingNeighborSignal,
                  "node " + std::to_string(id) + " has no signal from " + std::to_string(j));
    }
  }
  if (signals.size() != neighbors.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "node " + std::to_string(id) + " received signals from non-neighbors");
  }
}

}  // namespace

GainSolver::GainSolver(const Matrix& K) : llt_(K) {
  if (llt_.info() != Eigen::Success || !K.allFinite()) {
    throw Error(ErrorCode::SingularGain, "Cholesky factorization of K failed");
  }
}

Vector plant_rhs(const PlantModel& plant, const Vector& x, const Vector& w) {
  return plant.A * x + plant.B * w;
}

Vector filter_rhs(const Network& net, int id, const Matrix& K, const Vector& xhat,
                  const Vector& y, const NeighborSignals& c) {
  const NodeModel& node = net.node(id);
  const NodeDerived& d = net.derived(id);
  const auto& neighbors = net.neighbors(id);
  require_exact_keys(c, neighbors, id);
  if (y.size() != node.C.rows() || xhat.size() != net.state_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "filter input of node " + std::to_string(id));
  }

  Vector innovation = d.Ct_Rinv * (y - node.C * xhat);
  for (int j : neighbors) {
    const NeighborLink& link = node.links.at(j);
    const Vector& cj = signal_from(c, j, link.W.rows(), id);
    innovation += d.links.at(j).Wt_Uinv * (cj - link.W * xhat);
  }
  return net.plant().A * xhat + GainSolver(K).solve(innovation);
}

Vector error_rhs(const Network& net, int id, const Matrix& K, const Vector& e,
                 const NeighborSignals& e_neighbors, const Vector& w, const Vector& v,
                 const NeighborSignals& eps) {
  const NodeModel& node = net.node(id);
  const NodeDerived& d = net.derived(id);
  const auto& neighbors = net.neighbors(id);
  require_exact_keys(e_neighbors, neighbors, id);
  require_exact_keys(eps, neighbors, id);
  const Index n = net.state_dim();
  if (e.size() != n || w.size() != net.plant().B.cols() || v.size() != node.D.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "error input of node " + std::to_string(id));
  }

  Vector bracket = (d.Ct_Rinv_C + d.Delta) * e - d.Ct_Rinv * (node.D * v);
  for (int j : neighbors) {
    const NeighborLink& link = node.links.at(j);
    const Vector& ej = signal_from(e_neighbors, j, n, id);
    const Vector& epsj = signal_from(eps, j, link.F.cols(), id);
    bracket -= d.links.at(j).Wt_Uinv * (link.W * ej + link.F * epsj);
  }
  return net.plant().A * e - net.plant().B * w - GainSolver(K).solve(bracket);
}

}  // namespace dmef
