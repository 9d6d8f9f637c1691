#include "dmef/disturbance.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "dmef/error.hpp"

namespace dmef {

std::string ChannelId::name() const {
  switch (channel) {
    case Channel::model: return "w";
    case Channel::measurement: return "v" + std::to_string(node);
    case Channel::communication: return "eps" + std::to_string(node) + "_" + std::to_string(from);
  }
  return "?";
}

ChannelLayout::ChannelLayout(const Network& net) {
  ids_.push_back({Channel::model, 0, 0});
  dims_.push_back(net.plant().B.cols());
  for (int i = 1; i <= net.size(); ++i) {
    ids_.push_back({Channel::measurement, i, 0});
    dims_.push_back(net.node(i).D.cols());
  }
  for (const auto& [i, j] : net.edges()) {
    edge_index_[{i, j}] = ids_.size();
    ids_.push_back({Channel::communication, i, j});
    dims_.push_back(net.node(i).links.at(j).F.cols());
  }
}

std::size_t ChannelLayout::communication(int node, int from) const {
  const auto it = edge_index_.find({node, from});
  if (it == edge_index_.end()) {
    throw Error(ErrorCode::InvalidTopology,
                "no edge (" + std::to_string(node) + "," + std::to_string(from) + ")");
  }
  return it->second;
}

namespace {

std::vector<std::size_t> select_channels(const ChannelLayout& layout, const Network& net,
                                         const DisturbanceTarget& target) {
  std::vector<std::size_t> out;
  switch (target.channel) {
    case Channel::model:
      if (target.node != 0 || target.from != 0) {
        throw Error(ErrorCode::InvalidArgument, "model disturbance takes no node");
      }
      out.push_back(layout.model());
      break;
    case Channel::measurement:
      if (target.from != 0) throw Error(ErrorCode::InvalidArgument, "measurement target takes no 'from'");
      if (target.node == 0) {
        for (int i = 1; i <= net.size(); ++i) out.push_back(layout.measurement(i));
      } else {
        net.node(target.node);
        out.push_back(layout.measurement(target.node));
      }
      break;
    case Channel::communication:
      if (target.node == 0 && target.from != 0) {
        throw Error(ErrorCode::InvalidArgument, "'from' needs a receiving node");
      }
      for (const auto& [i, j] : net.edges()) {
        if ((target.node == 0 || target.node == i) && (target.from == 0 || target.from == j)) {
          out.push_back(layout.communication(i, j));
        }
      }
      if (target.from != 0 && out.empty()) layout.communication(target.node, target.from);
      break;
  }
  return out;
}

}  // namespace

DisturbanceField::DisturbanceField(const Network& net, std::span<const DisturbanceSpec> specs,
                                   const TimeGrid& grid, std::uint64_t seed)
    : layout_(net), grid_(grid), tracks_(layout_.size()) {
  const double T = grid.horizon();
  const auto snap = [&](double t, const char* what, std::size_t spec) {
    const double k = std::round(t / grid.dt);
    const double snapped = std::clamp(k * grid.dt, 0.0, T);
    if (std::abs(snapped - t) > 1e-9 * grid.dt) {
      std::ostringstream os;
      os << "disturbance " << spec << ": " << what << " " << t << " snapped to " << snapped;
      warnings_.push_back(os.str());
    }
    return snapped;
  };

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const DisturbanceSpec& spec = specs[s];
    const auto channels = select_channels(layout_, net, spec.target);

    if (const auto* pulse = std::get_if<Pulse>(&spec.signal)) {
      if (!(pulse->duration >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative pulse duration");
      const double begin = snap(pulse->start, "pulse start", s);
      const double end = snap(pulse->start + pulse->duration, "pulse end", s);
      if (end <= begin) continue;
      for (std::size_t c : channels) {
        const Index dim = layout_.dim(c);
        Vector value;
        if (pulse->amplitude.size() == 1) {
          value = Vector::Constant(dim, pulse->amplitude(0));
        } else if (pulse->amplitude.size() == dim) {
          value = pulse->amplitude;
        } else {
          throw Error(ErrorCode::DimensionMismatch,
                      "pulse amplitude for " + layout_.id(c).name() + " has wrong length");
        }
        tracks_[c].push_back({{begin, end, value}});
      }
    } else if (const auto* gauss = std::get_if<HeldGaussian>(&spec.signal)) {
      if (!(gauss->hold > 0.0) || !(gauss->stddev >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "held-gaussian needs hold > 0 and stddev >= 0");
      }
      const double hold = std::max(grid.dt, snap(gauss->hold, "hold interval", s));
      const double begin = snap(gauss->start, "start", s);
      const double end = gauss->duration < 0.0 ? T : snap(gauss->start + gauss->duration, "end", s);
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(gauss->seed),
                        static_cast<std::uint32_t>(gauss->seed >> 32), static_cast<std::uint32_t>(s)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(gauss->mean, gauss->stddev);
      for (std::size_t c : channels) {
        Track track;
        for (double a = begin; a < end - 0.5 * grid.dt; a += hold) {
          const double b = std::min(end, snap(a + hold, "segment end", s));
          Vector value(layout_.dim(c));
          for (Index k = 0; k < value.size(); ++k) value(k) = normal(rng);
          track.push_back({a, b, std::move(value)});
          a = b - hold;
        }
        if (!track.empty()) tracks_[c].push_back(std::move(track));
      }
    }
  }
}

std::vector<Vector> DisturbanceField::at(double t, StageSide side) const {
  std::vector<Vector> out;
  out.reserve(layout_.size());
  for (std::size_t c = 0; c < layout_.size(); ++c) {
    Vector value = Vector::Zero(layout_.dim(c));
    for (const Track& track : tracks_[c]) {
      if (side == StageSide::left) {
        // last segment with begin < t, active if t <= end
        auto it = std::lower_bound(track.begin(), track.end(), t,
                                   [](const Segment& s, double x) { return s.begin < x; });
        if (it != track.begin() && t <= std::prev(it)->end) value += std::prev(it)->value;
      } else {
        // last segment with begin <= t, active if t < end
        auto it = std::upper_bound(track.begin(), track.end(), t,
                                   [](double x, const Segment& s) { return x < s.begin; });
        if (it != track.begin() && t < std::prev(it)->end) value += std::prev(it)->value;
      }
    }
    out.push_back(std::move(value));
  }
  return out;
}

double DisturbanceField::l2_squared(std::size_t channel) const {
  std::set<double> cuts{0.0, grid_.horizon()};
  for (const Track& track : tracks_.at(channel)) {
    for (const Segment& s : track) {
      cuts.insert(std::clamp(s.begin, 0.0, grid_.horizon()));
      cuts.insert(std::clamp(s.end, 0.0, grid_.horizon()));
    }
  }
  double total = 0.0;
  for (auto it = cuts.begin(); std::next(it) != cuts.end(); ++it) {
    const double a = *it;
    const double b = *std::next(it);
    const double mid = 0.5 * (a + b);
    Vector value = Vector::Zero(layout_.dim(channel));
    for (const Track& track : tracks_[channel]) {
      for (const Segment& s : track) {
        if (s.begin <= mid && mid < s.end) value += s.value;
      }
    }
    total += value.squaredNorm() * (b - a);
  }
  return total;
}

double DisturbanceRecord::l2_squared(std::size_t channel) const {
  const ChannelRecord& rec = channels.at(channel);
  double total = 0.0;
  for (Index k = 0; k < rec.begin.cols(); ++k) {
    total += rec.begin.col(k).squaredNorm() + rec.end.col(k).squaredNorm();
  }
  return 0.5 * grid.dt * total;
}

}  // namespace dmef
