#include "dmef/model.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "dmef/error.hpp"

namespace dmef {

namespace {

std::string node_label(const char* what, int i) { return std::string(what) + "_" + std::to_string(i); }

std::string link_label(const char* what, int i, int j) {
  return std::string(what) + "_" + std::to_string(i) + "," + std::to_string(j);
}

void check_id(int id, int n_nodes) {
  if (id < 1 || id > n_nodes) {
    throw Error(ErrorCode::InvalidTopology,
                "node id " + std::to_string(id) + " outside 1.." + std::to_string(n_nodes));
  }
}

Matrix spd_inverse(const Matrix& x) {
  Eigen::LLT<Matrix> llt(x);
  return llt.solve(Matrix::Identity(x.rows(), x.cols()));
}

}  // namespace

const NodeModel& Network::node(int id) const {
  check_id(id, size());
  return nodes_[static_cast<std::size_t>(id - 1)];
}

const NodeDerived& Network::derived(int id) const {
  check_id(id, size());
  return derived_[static_cast<std::size_t>(id - 1)];
}

const std::vector<int>& Network::neighbors(int id) const {
  check_id(id, size());
  return neighbors_[static_cast<std::size_t>(id - 1)];
}

Network build_network(PlantModel plant, std::vector<NodeModel> nodes, std::vector<Edge> edges) {
  const Index n = plant.A.rows();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "A is empty");
  require_shape(plant.A, n, n, "A");
  if (plant.B.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "B has " + std::to_string(plant.B.rows()) +
                                                  " rows, expected " + std::to_string(n));
  }

  const int N = static_cast<int>(nodes.size());
  if (N == 0) throw Error(ErrorCode::InvalidTopology, "network has no nodes");

  std::set<Edge> edge_set;
  for (const auto& [i, j] : edges) {
    if (i == j) throw SelfLoop(i);
    check_id(i, N);
    check_id(j, N);
    if (!edge_set.insert({i, j}).second) {
      throw Error(ErrorCode::InvalidTopology,
                  "duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }

  Network net;
  net.Q_ = symmetrize(plant.B * plant.B.transpose());
  require_positive_semidefinite(net.Q_, "Q");
  net.edges_.assign(edge_set.begin(), edge_set.end());
  net.neighbors_.assign(static_cast<std::size_t>(N), {});
  for (const auto& [i, j] : net.edges_) net.neighbors_[static_cast<std::size_t>(i - 1)].push_back(j);

  net.derived_.resize(static_cast<std::size_t>(N));
  for (int i = 1; i <= N; ++i) {
    const NodeModel& node = nodes[static_cast<std::size_t>(i - 1)];
    NodeDerived& d = net.derived_[static_cast<std::size_t>(i - 1)];

    const Index p = node.C.rows();
    require_shape(node.C, p, n, node_label("C", i));
    require_shape(node.D, p, p, node_label("D", i));
    if (node.xi.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, node_label("xi", i) + " has wrong length");
    }
    require_shape(node.Xcal, n, n, node_label("Xcal", i));
    require_positive_definite(node.Xcal, node_label("Xcal", i));

    d.R = symmetrize(node.D * node.D.transpose());
    require_positive_definite(d.R, node_label("R", i));
    d.Ct_Rinv = node.C.transpose() * spd_inverse(d.R);
    d.Ct_Rinv_C = symmetrize(d.Ct_Rinv * node.C);

    const auto& nb = net.neighbors_[static_cast<std::size_t>(i - 1)];
    if (node.links.size() != nb.size() ||
        !std::all_of(nb.begin(), nb.end(), [&](int j) { return node.links.count(j) == 1; })) {
      throw Error(ErrorCode::InvalidTopology,
                  "links of node " + std::to_string(i) + " do not match its in-neighbors");
    }

    d.Delta = Matrix::Zero(n, n);
    d.DeltaTilde = Matrix::Zero(n, n);
    for (int j : nb) {
      const NeighborLink& link = node.links.at(j);
      const Index m = link.W.rows();
      require_shape(link.W, m, n, link_label("W", i, j));
      require_shape(link.F, m, m, link_label("F", i, j));
      require_shape(link.Z, n, n, link_label("Z", i, j));
      require_positive_definite(link.Z, link_label("Z", i, j));

      LinkDerived ld;
      ld.S = symmetrize(link.F * link.F.transpose());
      require_positive_definite(ld.S, link_label("S", i, j));
      ld.U = symmetrize(ld.S + link.W * link.Z * link.W.transpose());
      require_positive_definite(ld.U, link_label("U", i, j));
      ld.Wt_Uinv = link.W.transpose() * spd_inverse(ld.U);
      ld.Wt_Uinv_W = symmetrize(ld.Wt_Uinv * link.W);
      d.Delta += ld.Wt_Uinv_W;
      d.DeltaTilde += ld.Wt_Uinv_W * link.Z * ld.Wt_Uinv_W;
      d.links.emplace(j, std::move(ld));
    }
    d.Delta = symmetrize(d.Delta);
    d.DeltaTilde = symmetrize(d.DeltaTilde);
  }

  net.plant_ = std::move(plant);
  net.nodes_ = std::move(nodes);
  return net;
}

CouplingMatrices coupling_matrices(const Network& net) {
  const Index n = net.state_dim();
  const int N = net.size();
  CouplingMatrices cm;
  cm.Delta = Matrix::Zero(n * N, n * N);
  cm.DeltaTilde = Matrix::Zero(n * N, n * N);
  cm.Ltilde = Matrix::Zero(n * N, n * N);
  for (int i = 1; i <= N; ++i) {
    const NodeDerived& d = net.derived(i);
    const Index r = n * (i - 1);
    cm.Delta.block(r, r, n, n) = d.Delta;
    cm.DeltaTilde.block(r, r, n, n) = d.DeltaTilde;
    cm.Ltilde.block(r, r, n, n) = d.DeltaTilde;
    for (int j : net.neighbors(i)) {
      cm.Ltilde.block(r, n * (j - 1), n, n) = -d.links.at(j).Wt_Uinv_W;
    }
  }
  return cm;
}

GlobalMatrices assemble_global(const Network& net, std::span<const Matrix> M_blocks) {
  const Index n = net.state_dim();
  const int N = net.size();
  if (static_cast<int>(M_blocks.size()) != N) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(N) + " M blocks");
  }
  std::vector<Matrix> C, R, Minv;
  for (int i = 1; i <= N; ++i) {
    const Matrix& Mi = M_blocks[static_cast<std::size_t>(i - 1)];
    require_shape(Mi, n, n, node_label("M", i));
    require_positive_definite(Mi, node_label("M", i));
    C.push_back(net.node(i).C);
    R.push_back(net.derived(i).R);
    Minv.push_back(symmetrize(spd_inverse(Mi)));
  }
  GlobalMatrices gm;
  gm.coupling = coupling_matrices(net);
  gm.C = block_diagonal(C);
  gm.R = block_diagonal(R);
  gm.M = symmetrize(block_diagonal(M_blocks));
  gm.Minv = block_diagonal(Minv);
  return gm;
}

}  // namespace dmef
