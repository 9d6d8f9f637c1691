#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "dmef/disturbance.hpp"
#include "dmef/linalg.hpp"
#include "dmef/model.hpp"
#include "dmef/rk4.hpp"
#include "dmef/tuning.hpp"

namespace dmef {

struct FixedInitialState {
  Vector x0;
  bool operator==(const FixedInitialState& o) const { return same(x0, o.x0); }
};

/// i.i.d. N(mean, stddev^2) per coordinate. A length-1 mean is broadcast.
struct GaussianInitialState {
  Vector mean;
  double stddev = 1.0;
  bool operator==(const GaussianInitialState& o) const {
    return same(mean, o.mean) && stddev == o.stddev;
  }
};

using InitialStateLaw = std::variant<FixedInitialState, GaussianInitialState>;

/// Draws x0 for a run; deterministic in seed.
Vector sample_initial_state(const InitialStateLaw& law, Index n, std::uint64_t seed);

struct Scenario {
  Network network;
  double horizon = 10.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  InitialStateLaw x0_law;
  std::vector<DisturbanceSpec> disturbances;
  std::optional<TuningConfig> tuning;
  std::vector<Matrix> Minv;  // per node; empty until tuned
  std::vector<Matrix> K0;    // per node; empty means K_i(0) = Xcal_i

  TimeGrid grid() const { return TimeGrid::over(horizon, dt); }
  Matrix initial_gain(int id) const;

  bool operator==(const Scenario& o) const;
};

/// What the run knows about the stability hypotheses.
struct RunMetadata {
  std::optional<double> minv_margin;  // set when Minv is PD and a weighting is configured
  double min_gain_eigenvalue = 0.0;   // over all nodes and grid points
  double max_gain_eigenvalue = 0.0;
};

struct Trajectories {
  TimeGrid grid;
  Vector x0;
  Matrix x;                   // n x (steps+1)
  std::vector<Matrix> xhat;   // per node, n x (steps+1)
  std::vector<Matrix> K;      // per node, vec(K) as n*n x (steps+1)
  DisturbanceRecord disturbances;
  std::shared_ptr<const DisturbanceField> field;
  RunMetadata meta;

  int nodes() const { return static_cast<int>(xhat.size()); }
  Index state_dim() const { return x.rows(); }
  /// e_i(t_k) = xhat_i(t_k) - x(t_k).
  Vector error(int id, std::size_t k) const;
  Matrix errors(int id) const;
  Vector stacked_error(std::size_t k) const;
  Matrix gain(int id, std::size_t k) const;
};

/// Co-integrates plant, filters and gain equations with RK4. Uses
/// scenario.Minv, which must hold one PSD block per node.
/// Throws LostPositivity, SingularGain or NonFinite with the time of failure.
Trajectories simulate(const Scenario& scenario);

/// Same, with the disturbance realization and initial state given.
Trajectories simulate(const Scenario& scenario, std::shared_ptr<const DisturbanceField> field,
                      const Vector& x0);

/// Integrates the stacked error dynamics directly from e0 (nN) under the
/// realization `field`, co-integrating the gains. Returns nN x (steps+1).
Matrix simulate_error_oracle(const Scenario& scenario, const DisturbanceField& field,
                             const Vector& e0);

/// The five-node Chua circuit network with unit pulses of 1 s on every
/// disturbance channel, tuned with P = 1/2 (L + L_T) (x) I + 0.01 I.
Scenario make_chua_scenario(std::uint64_t seed);

/// Copy of the network in which node `id` ignores its neighbors (W_ij = 0).
Network isolate_network(const Network& net, int id);

/// Scenario copy running node `id` without neighbor information. Its M^-1 is
/// set to zero, the only choice that keeps its gain positive for a plant that
/// is not detectable from the node alone.
Scenario isolate_node(const Scenario& scenario, int id);

/// Tunes the scenario in place from its tuning section.
/// Throws InvalidArgument when there is none.
TuningResult tune_scenario(Scenario& scenario, const TuneOptions& options = {});

}  // namespace dmef
