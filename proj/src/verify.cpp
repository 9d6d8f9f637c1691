#include "dmef/verify.hpp"

#include <sstream>

#include "dmef/error.hpp"

namespace dmef {

namespace {

double trapezoid(const Vector& f, double dt) {
  if (f.size() < 2) return 0.0;
  return dt * (f.sum() - 0.5 * (f(0) + f(f.size() - 1)));
}

}  // namespace

double lhs_cost(const Matrix& e, const TimeGrid& grid, const Matrix& P) {
  if (e.cols() != static_cast<Index>(grid.steps + 1)) {
    throw Error(ErrorCode::DimensionMismatch, "error samples do not match the grid");
  }
  require_shape(P, e.rows(), e.rows(), "P");
  require_symmetric(P, "P");
  const Vector f = (e.array() * (P * e).array()).colwise().sum().transpose();
  return trapezoid(f, grid.dt);
}

double lhs_cost(const Trajectories& traj, const Matrix& P) {
  const Index n = traj.state_dim();
  Matrix e(n * traj.nodes(), traj.x.cols());
  for (int i = 1; i <= traj.nodes(); ++i) e.middleRows(n * (i - 1), n) = traj.errors(i);
  return lhs_cost(e, traj.grid, P);
}

namespace {

template <class ChannelL2>
Budget assemble_budget(const Network& net, const Trajectories& traj, const ChannelLayout& layout,
                       ChannelL2&& l2) {
  Budget b;
  for (int i = 1; i <= net.size(); ++i) {
    const NodeModel& node = net.node(i);
    const Vector d = traj.x0 - node.xi;
    b.initial += d.dot(node.Xcal * d);
    b.measurement += l2(layout.measurement(i));
  }
  b.model = net.size() * l2(layout.model());
  for (const auto& [i, j] : net.edges()) b.communication += l2(layout.communication(i, j));
  return b;
}

}  // namespace

Budget rhs_budget(const Network& net, const Trajectories& traj) {
  const ChannelLayout layout(net);
  if (traj.disturbances.channels.size() != layout.size()) {
    throw Error(ErrorCode::DimensionMismatch, "recorded disturbances do not match the network");
  }
  return assemble_budget(net, traj, layout,
                         [&](std::size_t c) { return traj.disturbances.l2_squared(c); });
}

Budget rhs_budget_exact(const Network& net, const Trajectories& traj) {
  if (!traj.field) throw Error(ErrorCode::InvalidArgument, "run carries no disturbance realization");
  return assemble_budget(net, traj, traj.field->layout(),
                         [&](std::size_t c) { return traj.field->l2_squared(c); });
}

HinfReport check_hinf(const Network& net, const Trajectories& traj, const Matrix& P) {
  HinfReport r;
  r.lhs = lhs_cost(traj, P);
  r.budget = rhs_budget(net, traj);
  r.rhs = r.budget.total();
  r.slack = r.rhs - r.lhs;

  const bool margin_ok = traj.meta.minv_margin && *traj.meta.minv_margin > 0.0;
  const bool gains_ok = traj.meta.min_gain_eigenvalue > 0.0;
  r.hypotheses_verified = margin_ok && gains_ok;
  if (!traj.meta.minv_margin) {
    r.warnings.push_back("hypothesis not verified: no coupling margin recorded for this run");
  } else if (!margin_ok) {
    std::ostringstream os;
    os << "hypothesis not verified: coupling margin " << *traj.meta.minv_margin << " <= 0";
    r.warnings.push_back(os.str());
  }
  if (!gains_ok) r.warnings.push_back("hypothesis not verified: gains left the positive definite cone");
  if (!is_positive_definite(P) && min_eigenvalue(P) < -kDefinitenessTol * (1.0 + P.norm())) {
    r.warnings.push_back("P is indefinite; lhs may be negative");
  }
  return r;
}

double consensus_cost(const Network& net, const std::vector<Matrix>& xhat, const TimeGrid& grid,
                      const Matrix& P0) {
  const Index n = net.state_dim();
  require_shape(P0, n, n, "P0");
  require_symmetric(P0, "P0");
  if (static_cast<int>(xhat.size()) != net.size()) {
    throw Error(ErrorCode::DimensionMismatch, "estimate count does not match the network");
  }
  Vector f = Vector::Zero(static_cast<Index>(grid.steps + 1));
  for (const auto& [i, j] : net.edges()) {
    const Matrix d = xhat[static_cast<std::size_t>(i - 1)] - xhat[static_cast<std::size_t>(j - 1)];
    if (d.cols() != f.size()) throw Error(ErrorCode::DimensionMismatch, "estimates do not match the grid");
    f += 0.5 * (d.array() * (P0 * d).array()).colwise().sum().transpose().matrix();
  }
  return trapezoid(f, grid.dt);
}

double consensus_cost(const Network& net, const Trajectories& traj, const Matrix& P0) {
  return consensus_cost(net, traj.xhat, traj.grid, P0);
}

NodeObservations node_observations(const Network& net, const Trajectories& traj, int id) {
  const NodeModel& node = net.node(id);
  const ChannelLayout layout(net);
  const auto steps = static_cast<Index>(traj.grid.steps);
  const auto sample = [&](std::size_t channel, Index k) -> Vector {
    const ChannelRecord& rec = traj.disturbances.channels.at(channel);
    return k < steps ? Vector(rec.begin.col(k)) : Vector(rec.end.col(steps - 1));
  };

  NodeObservations obs;
  obs.grid = traj.grid;
  obs.xhat = traj.xhat.at(static_cast<std::size_t>(id - 1));
  obs.y.resize(node.C.rows(), steps + 1);
  for (int j : net.neighbors(id)) obs.c[j].resize(node.links.at(j).W.rows(), steps + 1);
  for (Index k = 0; k <= steps; ++k) {
    obs.y.col(k) = node.C * traj.x.col(k) + node.D * sample(layout.measurement(id), k);
    for (int j : net.neighbors(id)) {
      const NeighborLink& link = node.links.at(j);
      obs.c[j].col(k) = link.W * traj.xhat.at(static_cast<std::size_t>(j - 1)).col(k) +
                        link.F * sample(layout.communication(id, j), k);
    }
  }
  return obs;
}

double energy_cost(const Network& net, int id, const Matrix& Minv, const NodeObservations& obs,
                   const EnergyCandidate& cand) {
  const NodeModel& node = net.node(id);
  const NodeDerived& der = net.derived(id);
  const PlantModel& plant = net.plant();
  const Index n = net.state_dim();
  const auto cols = static_cast<Index>(obs.grid.steps + 1);
  require_shape(Minv, n, n, "M^-1");
  if (cand.x0.size() != n || cand.w.rows() != plant.B.cols() || cand.w.cols() != cols ||
      obs.y.cols() != cols || obs.xhat.cols() != cols || obs.y.rows() != node.C.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "energy cost inputs do not match the grid");
  }
  const auto& neighbors = net.neighbors(id);
  for (int j : neighbors) {
    const auto c = obs.c.find(j);
    const auto eta = cand.eta.find(j);
    if (c == obs.c.end() || eta == cand.eta.end()) {
      throw Error(ErrorCode::MissingNeighborSignal, "energy cost lacks data for neighbor " + std::to_string(j));
    }
    if (c->second.cols() != cols || eta->second.cols() != cols || eta->second.rows() != n) {
      throw Error(ErrorCode::DimensionMismatch, "energy cost neighbor data do not match the grid");
    }
  }

  const double dt = obs.grid.dt;
  Matrix x(n, cols);
  x.col(0) = cand.x0;
  for (Index k = 0; k + 1 < cols; ++k) {
    const double t0 = obs.grid.at(static_cast<std::size_t>(k));
    const auto f = [&](double t, StageSide, const Vector& state) -> Vector {
      const double a = (t - t0) / dt;
      return plant.A * state + plant.B * ((1.0 - a) * cand.w.col(k) + a * cand.w.col(k + 1));
    };
    x.col(k + 1) = rk4_step(Vector(x.col(k)), t0, dt, f);
  }

  const Matrix Rinv = der.R.llt().solve(Matrix::Identity(der.R.rows(), der.R.cols()));
  Vector f(cols);
  for (Index k = 0; k < cols; ++k) {
    const Vector xk = x.col(k);
    const Vector r = obs.y.col(k) - node.C * xk;
    double value = cand.w.col(k).squaredNorm() + r.dot(Rinv * r);
    for (int j : neighbors) {
      const NeighborLink& link = node.links.at(j);
      const LinkDerived& ld = der.links.at(j);
      const Vector eta = cand.eta.at(j).col(k);
      const Vector rc = obs.c.at(j).col(k) - link.W * xk - link.W * eta;
      value += rc.dot(ld.S.llt().solve(rc)) + eta.dot(link.Z.llt().solve(eta));
    }
    const Vector dx = xk - obs.xhat.col(k);
    value -= dx.dot(Minv * dx);
    f(k) = value;
  }
  const Vector d0 = cand.x0 - node.xi;
  return 0.5 * d0.dot(node.Xcal * d0) + 0.5 * trapezoid(f, dt);
}

}  // namespace dmef
