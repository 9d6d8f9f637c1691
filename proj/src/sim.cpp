#include "dmef/sim.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "dmef/error.hpp"
#include "dmef/filter.hpp"
#include "dmef/riccati.hpp"

namespace dmef {

Vector sample_initial_state(const InitialStateLaw& law, Index n, std::uint64_t seed) {
  if (const auto* fixed = std::get_if<FixedInitialState>(&law)) {
    if (fixed->x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "x0 has wrong length");
    return fixed->x0;
  }
  const auto& gauss = std::get<GaussianInitialState>(law);
  if (gauss.mean.size() != 1 && gauss.mean.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "x0 mean has wrong length");
  }
  if (!(gauss.stddev >= 0.0)) throw Error(ErrorCode::InvalidArgument, "x0 stddev must be >= 0");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x78u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x0(n);
  for (Index k = 0; k < n; ++k) {
    const double mean = gauss.mean.size() == 1 ? gauss.mean(0) : gauss.mean(k);
    x0(k) = mean + gauss.stddev * normal(rng);
  }
  return x0;
}

namespace {

bool same_blocks(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const Matrix& x, const Matrix& y) { return same(x, y); });
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  return network == o.network && horizon == o.horizon && dt == o.dt && seed == o.seed &&
         x0_law == o.x0_law && disturbances == o.disturbances && tuning == o.tuning &&
         same_blocks(Minv, o.Minv) && same_blocks(K0, o.K0);
}

Matrix Scenario::initial_gain(int id) const {
  if (K0.empty()) return network.node(id).Xcal;
  return K0.at(static_cast<std::size_t>(id - 1));
}

Vector Trajectories::error(int id, std::size_t k) const {
  return xhat.at(static_cast<std::size_t>(id - 1)).col(static_cast<Index>(k)) - x.col(static_cast<Index>(k));
}

Matrix Trajectories::errors(int id) const { return xhat.at(static_cast<std::size_t>(id - 1)) - x; }

Vector Trajectories::stacked_error(std::size_t k) const {
  const Index n = state_dim();
  Vector e(n * nodes());
  for (int i = 1; i <= nodes(); ++i) e.segment(n * (i - 1), n) = error(i, k);
  return e;
}

Matrix Trajectories::gain(int id, std::size_t k) const {
  const Index n = state_dim();
  return K.at(static_cast<std::size_t>(id - 1)).col(static_cast<Index>(k)).reshaped(n, n);
}

namespace {

// Packed state: x, then xhat_1..xhat_N, then vec(K_1)..vec(K_N).
struct Packing {
  Index n;
  int N;

  Index size() const { return n + N * n + N * n * n; }
  Index xhat(int i) const { return n + (i - 1) * n; }
  Index gain(int i) const { return n + N * n + (i - 1) * n * n; }
};

std::vector<RiccatiCoefficients> node_coefficients(const Scenario& s) {
  const int N = s.network.size();
  if (static_cast<int>(s.Minv.size()) != N) {
    throw Error(ErrorCode::InvalidArgument, "scenario has no M^-1 block per node (tune it first)");
  }
  std::vector<RiccatiCoefficients> out;
  for (int i = 1; i <= N; ++i) {
    const std::string label = "M_" + std::to_string(i) + "^-1";
    const Matrix& Minv = s.Minv[static_cast<std::size_t>(i - 1)];
    require_shape(Minv, s.network.state_dim(), s.network.state_dim(), label);
    require_positive_semidefinite(Minv, label);
    out.push_back(node_riccati_coefficients(s.network, i, Minv));
  }
  return out;
}

std::string at_time(const std::string& message, double t) {
  std::ostringstream os;
  os << message << " at t=" << t;
  return os.str();
}

// Re-symmetrizes the gain blocks of a packed state in place and returns the
// extreme eigenvalues over all nodes.
std::pair<double, double> accept_gains(Vector& y, const Packing& p, double t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 1; i <= p.N; ++i) {
    auto block = y.segment(p.gain(i), p.n * p.n).reshaped(p.n, p.n);
    const Matrix K = symmetrize(Matrix(block));
    if (!K.allFinite()) throw NonFinite("K_" + std::to_string(i), t);
    block = K;
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(K, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > kDefinitenessTol * (1.0 + K.norm()))) throw LostPositivity(i, t, ev(0));
    lo = std::min(lo, ev(0));
    hi = std::max(hi, ev(p.n - 1));
  }
  return {lo, hi};
}

}  // namespace

Trajectories simulate(const Scenario& scenario) {
  const TimeGrid grid = scenario.grid();
  auto field = std::make_shared<const DisturbanceField>(scenario.network, scenario.disturbances, grid,
                                                        scenario.seed);
  const Vector x0 = sample_initial_state(scenario.x0_law, scenario.network.state_dim(), scenario.seed);
  return simulate(scenario, std::move(field), x0);
}

Trajectories simulate(const Scenario& scenario, std::shared_ptr<const DisturbanceField> field,
                      const Vector& x0) {
  const Network& net = scenario.network;
  const Index n = net.state_dim();
  const int N = net.size();
  const TimeGrid grid = scenario.grid();
  if (field->grid().dt != grid.dt || field->grid().steps != grid.steps) {
    throw Error(ErrorCode::InvalidArgument, "disturbance field was realized on another grid");
  }
  if (x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "x0 has wrong length");
  const auto coeffs = node_coefficients(scenario);
  const ChannelLayout& layout = field->layout();
  const Packing p{n, N};

  Trajectories out;
  out.grid = grid;
  out.x0 = x0;
  out.field = field;
  const auto cols = static_cast<Index>(grid.steps + 1);
  out.x.resize(n, cols);
  out.xhat.assign(static_cast<std::size_t>(N), Matrix(n, cols));
  out.K.assign(static_cast<std::size_t>(N), Matrix(n * n, cols));
  out.disturbances.grid = grid;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const auto steps = static_cast<Index>(grid.steps);
    out.disturbances.channels.push_back({layout.id(c), Matrix(layout.dim(c), steps), Matrix(layout.dim(c), steps)});
  }

  Vector y(p.size());
  y.head(n) = x0;
  for (int i = 1; i <= N; ++i) {
    const Matrix K0 = scenario.initial_gain(i);
    require_shape(K0, n, n, "K_" + std::to_string(i) + "(0)");
    y.segment(p.xhat(i), n) = net.node(i).xi;
    y.segment(p.gain(i), n * n) = K0.reshaped();
  }
  auto [lo, hi] = accept_gains(y, p, 0.0);
  out.meta.min_gain_eigenvalue = lo;
  out.meta.max_gain_eigenvalue = hi;

  const auto store = [&](const Vector& state, std::size_t k) {
    const auto col = static_cast<Index>(k);
    out.x.col(col) = state.head(n);
    for (int i = 1; i <= N; ++i) {
      const auto slot = static_cast<std::size_t>(i - 1);
      out.xhat[slot].col(col) = state.segment(p.xhat(i), n);
      out.K[slot].col(col) = state.segment(p.gain(i), n * n);
    }
  };
  store(y, 0);

  std::size_t step = 0;
  const auto rhs = [&](double t, StageSide side, const Vector& state) {
    const std::vector<Vector> d = field->at(t, side);
    if (side != StageSide::interior) {
      for (std::size_t c = 0; c < d.size(); ++c) {
        auto& rec = out.disturbances.channels[c];
        (side == StageSide::right ? rec.begin : rec.end).col(static_cast<Index>(step)) = d[c];
      }
    }
    Vector dy(p.size());
    const auto x = state.head(n);
    dy.head(n) = plant_rhs(net.plant(), x, d[layout.model()]);
    for (int i = 1; i <= N; ++i) {
      const NodeModel& node = net.node(i);
      const Matrix K = state.segment(p.gain(i), n * n).reshaped(n, n);
      const Vector meas = node.C * x + node.D * d[layout.measurement(i)];
      NeighborSignals c;
      for (int j : net.neighbors(i)) {
        const NeighborLink& link = node.links.at(j);
        c[j] = link.W * state.segment(p.xhat(j), n) + link.F * d[layout.communication(i, j)];
      }
      try {
        dy.segment(p.xhat(i), n) = filter_rhs(net, i, K, state.segment(p.xhat(i), n), meas, c);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularGain) throw;
        // an intermediate stage already left the cone
        const Matrix Ks = symmetrize(K);
        if (!Ks.allFinite()) throw NonFinite("K_" + std::to_string(i), t);
        throw LostPositivity(i, t, Eigen::SelfAdjointEigenSolver<Matrix>(Ks, Eigen::EigenvaluesOnly).eigenvalues()(0));
      }
      dy.segment(p.gain(i), n * n) = riccati_rhs(K, coeffs[static_cast<std::size_t>(i - 1)]).reshaped();
    }
    return dy;
  };

  for (; step < grid.steps; ++step) {
    const double t = grid.at(step);
    try {
      y = rk4_step(y, t, grid.dt, rhs);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularGain) throw Error(ErrorCode::SingularGain, at_time(e.what(), t));
      throw;
    }
    const double t1 = grid.at(step + 1);
    if (!y.head(p.gain(1)).allFinite()) throw NonFinite("state or estimate", t1);
    const auto [l, h] = accept_gains(y, p, t1);
    out.meta.min_gain_eigenvalue = std::min(out.meta.min_gain_eigenvalue, l);
    out.meta.max_gain_eigenvalue = std::max(out.meta.max_gain_eigenvalue, h);
    store(y, step + 1);
  }

  if (scenario.tuning) {
    const bool all_pd = std::all_of(scenario.Minv.begin(), scenario.Minv.end(),
                                    [](const Matrix& m) { return is_positive_definite(m); });
    if (all_pd) {
      out.meta.minv_margin =
          check_minv(coupling_matrices(net), scenario.Minv, scenario.tuning->weighting(net));
    }
  }
  return out;
}

Matrix simulate_error_oracle(const Scenario& scenario, const DisturbanceField& field, const Vector& e0) {
  const Network& net = scenario.network;
  const Index n = net.state_dim();
  const int N = net.size();
  const TimeGrid grid = scenario.grid();
  if (e0.size() != n * N) throw Error(ErrorCode::DimensionMismatch, "e0 has wrong length");
  const auto coeffs = node_coefficients(scenario);
  const ChannelLayout& layout = field.layout();
  // Same packing with the plant slot unused.
  const Packing p{n, N};

  Vector y = Vector::Zero(p.size());
  for (int i = 1; i <= N; ++i) {
    y.segment(p.xhat(i), n) = e0.segment(n * (i - 1), n);
    y.segment(p.gain(i), n * n) = scenario.initial_gain(i).reshaped();
  }
  accept_gains(y, p, 0.0);

  Matrix out(n * N, static_cast<Index>(grid.steps + 1));
  out.col(0) = e0;
  const auto rhs = [&](double t, StageSide side, const Vector& state) {
    const std::vector<Vector> d = field.at(t, side);
    Vector dy = Vector::Zero(p.size());
    for (int i = 1; i <= N; ++i) {
      const Matrix K = state.segment(p.gain(i), n * n).reshaped(n, n);
      NeighborSignals ej, eps;
      for (int j : net.neighbors(i)) {
        ej[j] = state.segment(p.xhat(j), n);
        eps[j] = d[layout.communication(i, j)];
      }
      dy.segment(p.xhat(i), n) = error_rhs(net, i, K, state.segment(p.xhat(i), n), ej,
                                           d[layout.model()], d[layout.measurement(i)], eps);
      dy.segment(p.gain(i), n * n) = riccati_rhs(K, coeffs[static_cast<std::size_t>(i - 1)]).reshaped();
    }
    return dy;
  };

  for (std::size_t step = 0; step < grid.steps; ++step) {
    y = rk4_step(y, grid.at(step), grid.dt, rhs);
    const double t1 = grid.at(step + 1);
    if (!y.allFinite()) throw NonFinite("error state", t1);
    accept_gains(y, p, t1);
    for (int i = 1; i <= N; ++i) {
      out.col(static_cast<Index>(step + 1)).segment(n * (i - 1), n) = y.segment(p.xhat(i), n);
    }
  }
  return out;
}

Scenario make_chua_scenario(std::uint64_t seed) {
  PlantModel plant;
  plant.A.resize(3, 3);
  plant.A << -3.2, 10, 0,
             1, -1, 1,
             0, -14.87, 0;
  plant.B = 0.4 * Matrix::Identity(3, 3);

  Matrix c_weak(1, 3), c_strong(1, 3);
  c_weak << 0.001 * 3.1923, 0.001 * -4.6597, 0.001 * 1.0;
  c_strong << -0.8986, 0.1312, -1.9703;

  const std::vector<Edge> edges{{1, 3}, {2, 3}, {3, 1}, {3, 2}, {3, 4}, {4, 3}, {4, 5}, {5, 4}};
  const NeighborLink link{Matrix::Identity(3, 3), 0.5 * Matrix::Identity(3, 3), 0.1 * Matrix::Identity(3, 3)};

  std::vector<NodeModel> nodes;
  for (int i = 1; i <= 5; ++i) {
    NodeModel node;
    node.C = (i == 1 || i == 4) ? c_weak : c_strong;
    node.D = Matrix::Constant(1, 1, 0.025);
    node.xi = Vector::Zero(3);
    node.Xcal = 10.0 * Matrix::Identity(3, 3);
    for (const auto& [a, b] : edges) {
      if (a == i) node.links[b] = link;
    }
    nodes.push_back(std::move(node));
  }

  Scenario s;
  s.network = build_network(std::move(plant), std::move(nodes), edges);
  s.horizon = 10.0;
  s.dt = 1e-3;
  s.seed = seed;
  s.x0_law = GaussianInitialState{Vector::Constant(1, 0.1), 0.2};
  const Pulse unit{Vector::Constant(1, 1.0), 0.0, 1.0};
  s.disturbances = {
      {{Channel::model, 0, 0}, unit},
      {{Channel::measurement, 0, 0}, unit},
      {{Channel::communication, 0, 0}, unit},
  };
  TuningConfig tuning;
  tuning.P0 = Matrix::Identity(3, 3);
  tuning.ridge = 0.01;
  tuning.mode = ScalarMode::per_node;
  s.tuning = tuning;
  tune_scenario(s);
  return s;
}

TuningResult tune_scenario(Scenario& scenario, const TuneOptions& options) {
  if (!scenario.tuning) throw Error(ErrorCode::InvalidArgument, "scenario has no tuning section");
  TuneOptions opt = options;
  opt.mode = scenario.tuning->mode;
  TuningResult result = tune_scalar(scenario.network, scenario.tuning->weighting(scenario.network), opt);
  scenario.Minv = result.Minv;
  return result;
}

Network isolate_network(const Network& net, int id) {
  std::vector<NodeModel> nodes = net.nodes();
  NodeModel& node = nodes.at(static_cast<std::size_t>(id - 1));
  for (auto& [j, link] : node.links) link.W.setZero();
  return build_network(net.plant(), std::move(nodes), net.edges());
}

Scenario isolate_node(const Scenario& scenario, int id) {
  Scenario s = scenario;
  s.network = isolate_network(scenario.network, id);
  if (!s.Minv.empty()) s.Minv.at(static_cast<std::size_t>(id - 1)).setZero();
  return s;
}

}  // namespace dmef
