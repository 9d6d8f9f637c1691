#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "dmef/linalg.hpp"

namespace dmef {

/// Plant dynamics xdot = A x + B w.
struct PlantModel {
  Matrix A;  // n x n
  Matrix B;  // n x q

  Index state_dim() const { return A.rows(); }
  Index disturbance_dim() const { return B.cols(); }

  bool operator==(const PlantModel& o) const { return same(A, o.A) && same(B, o.B); }
};

/// What node i knows about the signal it receives from neighbor j:
/// c_ij = W x_j_hat + F eps_ij, and the confidence weight Z on x_j_hat = x + eta_ij.
struct NeighborLink {
  Matrix W;  // m_ij x n
  Matrix F;  // m_ij x m_ij
  Matrix Z;  // n x n

  bool operator==(const NeighborLink& o) const { return same(W, o.W) && same(F, o.F) && same(Z, o.Z); }
};

struct NodeModel {
  Matrix C;     // p_i x n
  Matrix D;     // p_i x p_i
  Vector xi;    // a priori initial-state guess
  Matrix Xcal;  // initialization weight, also the Riccati initial condition
  std::map<int, NeighborLink> links;  // keyed by sending neighbor id (1-based)

  bool operator==(const NodeModel& o) const {
    return same(C, o.C) && same(D, o.D) && same(xi, o.xi) && same(Xcal, o.Xcal) && links == o.links;
  }
};

/// Directed edge (i, j): node j sends to node i. Ids are 1-based.
using Edge = std::pair<int, int>;

struct LinkDerived {
  Matrix S;          // F F^T
  Matrix U;          // S + W Z W^T
  Matrix Wt_Uinv;    // W^T U^-1
  Matrix Wt_Uinv_W;  // W^T U^-1 W
};

struct NodeDerived {
  Matrix R;         // D D^T
  Matrix Ct_Rinv;   // C^T R^-1
  Matrix Ct_Rinv_C;
  Matrix Delta;       // sum_j W^T U^-1 W
  Matrix DeltaTilde;  // sum_j W^T U^-1 W Z W^T U^-1 W
  std::map<int, LinkDerived> links;
};

/// Validated plant + nodes + topology with every derived matrix cached.
/// Immutable after build_network.
class Network {
 public:
  const PlantModel& plant() const { return plant_; }
  const Matrix& Q() const { return Q_; }
  Index state_dim() const { return plant_.state_dim(); }
  int size() const { return static_cast<int>(nodes_.size()); }

  const NodeModel& node(int id) const;
  const NodeDerived& derived(int id) const;
  const std::vector<NodeModel>& nodes() const { return nodes_; }
  /// Edges sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Sorted ids j with (id, j) in the edge set.
  const std::vector<int>& neighbors(int id) const;

  bool operator==(const Network& other) const {
    return plant_ == other.plant_ && nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  friend Network build_network(PlantModel, std::vector<NodeModel>, std::vector<Edge>);

  PlantModel plant_;
  Matrix Q_;
  std::vector<NodeModel> nodes_;
  std::vector<NodeDerived> derived_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Validates dimensions, topology and definiteness, then caches
/// Q, R_i, S_ij, U_ij and the per-node neighbor sums.
Network build_network(PlantModel plant, std::vector<NodeModel> nodes, std::vector<Edge> edges);

/// Block matrices of the stacked error system that do not depend on M.
struct CouplingMatrices {
  Matrix Delta;       // diag_i sum_j W^T U^-1 W
  Matrix DeltaTilde;  // diag_i sum_j W^T U^-1 W Z W^T U^-1 W
  Matrix Ltilde;      // [L_ij]
};

CouplingMatrices coupling_matrices(const Network& net);

struct GlobalMatrices {
  CouplingMatrices coupling;
  Matrix C;     // diag(C_i)
  Matrix R;     // diag(R_i)
  Matrix M;     // diag(M_i)
  Matrix Minv;  // diag(M_i^-1)
};

/// Throws NotPositiveDefinite("M_i", .) if some block is not symmetric PD.
GlobalMatrices assemble_global(const Network& net, std::span<const Matrix> M_blocks);

}  // namespace dmef
