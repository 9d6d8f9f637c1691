#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dmef/linalg.hpp"
#include "dmef/model.hpp"
#include "dmef/rk4.hpp"

namespace dmef {

enum class Channel { model, measurement, communication };

/// Which disturbance a spec drives. node == 0 selects every node (every edge
/// for communication); from == 0 selects every in-neighbor of `node`.
struct DisturbanceTarget {
  Channel channel = Channel::model;
  int node = 0;
  int from = 0;

  bool operator==(const DisturbanceTarget&) const = default;
};

struct ZeroSignal {
  bool operator==(const ZeroSignal&) const = default;
};

/// Constant `amplitude` on [start, start + duration). A length-1 amplitude
/// is broadcast to every component.
struct Pulse {
  Vector amplitude;
  double start = 0.0;
  double duration = 0.0;

  bool operator==(const Pulse& o) const {
    return same(amplitude, o.amplitude) && start == o.start && duration == o.duration;
  }
};

/// Piecewise-constant i.i.d. N(mean, stddev^2) values redrawn every `hold`
/// seconds on [start, start + duration), truncated at the horizon.
/// duration < 0 means "until the horizon".
struct HeldGaussian {
  double mean = 0.0;
  double stddev = 1.0;
  double hold = 0.1;
  std::uint64_t seed = 0;
  double start = 0.0;
  double duration = -1.0;

  bool operator==(const HeldGaussian&) const = default;
};

struct DisturbanceSpec {
  DisturbanceTarget target;
  std::variant<ZeroSignal, Pulse, HeldGaussian> signal;

  bool operator==(const DisturbanceSpec&) const = default;
};

/// One concrete disturbance input: w, v_i or eps_ij.
struct ChannelId {
  Channel channel = Channel::model;
  int node = 0;
  int from = 0;

  std::string name() const;
  bool operator==(const ChannelId&) const = default;
};

/// Canonical channel order: w, v_1..v_N, then eps_ij in sorted edge order.
class ChannelLayout {
 public:
  explicit ChannelLayout(const Network& net);

  std::size_t size() const { return ids_.size(); }
  const ChannelId& id(std::size_t k) const { return ids_[k]; }
  Index dim(std::size_t k) const { return dims_[k]; }
  std::size_t model() const { return 0; }
  std::size_t measurement(int node) const { return static_cast<std::size_t>(node); }
  std::size_t communication(int node, int from) const;

 private:
  std::vector<ChannelId> ids_;
  std::vector<Index> dims_;
  std::map<Edge, std::size_t> edge_index_;
};

/// Realization of a list of specs for one run. Immutable and deterministic
/// in (specs, grid, seed).
class DisturbanceField {
 public:
  DisturbanceField(const Network& net, std::span<const DisturbanceSpec> specs, const TimeGrid& grid,
                   std::uint64_t seed);

  const ChannelLayout& layout() const { return layout_; }
  const TimeGrid& grid() const { return grid_; }

  /// Every channel's value at t, taking the one-sided limit `side` at jumps.
  std::vector<Vector> at(double t, StageSide side) const;

  /// Exact integral of ||channel||^2 over [0, T].
  double l2_squared(std::size_t channel) const;

  /// Messages about edges snapped to the grid.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Segment {
    double begin;
    double end;
    Vector value;
  };
  using Track = std::vector<Segment>;  // sorted, disjoint

  ChannelLayout layout_;
  TimeGrid grid_;
  std::vector<std::vector<Track>> tracks_;  // per channel
  std::vector<std::string> warnings_;
};

/// Disturbance samples recorded by a run: for every step interval k the value
/// at t_k from the right and at t_{k+1} from the left.
struct ChannelRecord {
  ChannelId id;
  Matrix begin;  // dim x steps
  Matrix end;    // dim x steps
};

struct DisturbanceRecord {
  TimeGrid grid;
  std::vector<ChannelRecord> channels;

  /// Trapezoid of ||channel||^2 using the one-sided samples of every interval.
  double l2_squared(std::size_t channel) const;
};

}  // namespace dmef
