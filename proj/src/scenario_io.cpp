#include "dmef/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dmef/error.hpp"

namespace dmef {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& detail) const {
    const YAML::Mark m = at.Mark();
    if (m.is_null()) throw ParseError(origin_, 0, 0, detail);
    throw ParseError(origin_, m.line + 1, m.column + 1, detail);
  }

  void keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  YAML::Node require(const YAML::Node& map, const char* key, const std::string& where) const {
    const YAML::Node v = map[key];
    if (!v) fail(map, "missing '" + std::string(key) + "' in " + where);
    return v;
  }

  double number(const YAML::Node& v, const std::string& what) const {
    if (!v.IsScalar()) fail(v, what + " must be a number");
    try {
      return v.as<double>();
    } catch (const YAML::Exception&) {
      fail(v, what + " is not a number: '" + v.Scalar() + "'");
    }
  }

  std::uint64_t unsigned_integer(const YAML::Node& v, const std::string& what) const {
    if (!v.IsScalar()) fail(v, what + " must be an integer");
    try {
      return v.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(v, what + " is not a non-negative integer: '" + v.Scalar() + "'");
    }
  }

  int integer(const YAML::Node& v, const std::string& what) const {
    if (!v.IsScalar()) fail(v, what + " must be an integer");
    try {
      return v.as<int>();
    } catch (const YAML::Exception&) {
      fail(v, what + " is not an integer: '" + v.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& v, const std::string& what) const {
    if (!v.IsScalar()) fail(v, what + " must be a string");
    return v.Scalar();
  }

  Vector vector(const YAML::Node& v, const std::string& what) const {
    if (v.IsScalar()) return Vector::Constant(1, number(v, what));
    if (!v.IsSequence()) fail(v, what + " must be a list of numbers");
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Index>(k)) = number(v[k], what);
    return out;
  }

  // Row-major nested list; a bare number is a 1 x 1 matrix.
  Matrix matrix(const YAML::Node& v, const std::string& what) const {
    if (v.IsScalar()) return Matrix::Constant(1, 1, number(v, what));
    if (!v.IsSequence() || v.size() == 0) fail(v, what + " must be a non-empty list of rows");
    Index cols = -1;
    Matrix out;
    for (std::size_t r = 0; r < v.size(); ++r) {
      const YAML::Node row = v[r];
      if (!row.IsSequence()) fail(row, what + " row " + std::to_string(r + 1) + " must be a list");
      if (cols < 0) {
        cols = static_cast<Index>(row.size());
        if (cols == 0) fail(row, what + " has an empty row");
        out.resize(static_cast<Index>(v.size()), cols);
      } else if (static_cast<Index>(row.size()) != cols) {
        fail(row, what + " row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(cols));
      }
      for (std::size_t c = 0; c < row.size(); ++c) {
        out(static_cast<Index>(r), static_cast<Index>(c)) = number(row[c], what);
      }
    }
    return out;
  }

  Edge edge(const YAML::Node& v, const std::string& what) const {
    if (!v.IsSequence() || v.size() != 2) fail(v, what + " must be a pair [i, j]");
    return {integer(v[0], what), integer(v[1], what)};
  }

  NeighborLink link(const YAML::Node& v, const NeighborLink* fallback, const std::string& where) const {
    NeighborLink out;
    if (fallback) out = *fallback;
    for (const char* key : {"W", "F", "Z"}) {
      const YAML::Node m = v[key];
      if (m) {
        Matrix value = matrix(m, where + "." + key);
        (key[0] == 'W' ? out.W : key[0] == 'F' ? out.F : out.Z) = std::move(value);
      } else if (!fallback) {
        fail(v, "missing '" + std::string(key) + "' in " + where);
      }
    }
    return out;
  }

 private:
  std::string origin_;
};

DisturbanceSpec parse_disturbance(const Reader& rd, const YAML::Node& v, std::size_t index) {
  const std::string where = "disturbances[" + std::to_string(index) + "]";
  rd.keys(v, {"target", "node", "from", "pulse", "held_gaussian", "zero"}, where);
  DisturbanceSpec spec;
  const YAML::Node target = rd.require(v, "target", where);
  const std::string t = rd.text(target, where + ".target");
  if (t == "w") {
    spec.target.channel = Channel::model;
  } else if (t == "v") {
    spec.target.channel = Channel::measurement;
  } else if (t == "eps") {
    spec.target.channel = Channel::communication;
  } else {
    rd.fail(target, "target must be one of w, v, eps");
  }
  if (v["node"]) spec.target.node = rd.integer(v["node"], where + ".node");
  if (v["from"]) spec.target.from = rd.integer(v["from"], where + ".from");

  const int kinds = (v["pulse"] ? 1 : 0) + (v["held_gaussian"] ? 1 : 0) + (v["zero"] ? 1 : 0);
  if (kinds != 1) rd.fail(v, where + " needs exactly one of pulse, held_gaussian, zero");
  if (const YAML::Node p = v["pulse"]) {
    rd.keys(p, {"amplitude", "start", "duration"}, where + ".pulse");
    Pulse pulse;
    pulse.amplitude = rd.vector(rd.require(p, "amplitude", where + ".pulse"), "amplitude");
    if (p["start"]) pulse.start = rd.number(p["start"], "start");
    pulse.duration = rd.number(rd.require(p, "duration", where + ".pulse"), "duration");
    spec.signal = pulse;
  } else if (const YAML::Node g = v["held_gaussian"]) {
    rd.keys(g, {"mean", "std", "hold", "seed", "start", "duration"}, where + ".held_gaussian");
    HeldGaussian h;
    if (g["mean"]) h.mean = rd.number(g["mean"], "mean");
    h.stddev = rd.number(rd.require(g, "std", where + ".held_gaussian"), "std");
    h.hold = rd.number(rd.require(g, "hold", where + ".held_gaussian"), "hold");
    if (g["seed"]) h.seed = rd.unsigned_integer(g["seed"], "seed");
    if (g["start"]) h.start = rd.number(g["start"], "start");
    if (g["duration"]) h.duration = rd.number(g["duration"], "duration");
    spec.signal = h;
  } else {
    const YAML::Node z = v["zero"];
    if (!z.IsNull() && !(z.IsScalar() && z.as<std::string>() == "true")) {
      rd.fail(z, "zero takes no parameters");
    }
    spec.signal = ZeroSignal{};
  }
  return spec;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(origin, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  const Reader rd(origin);
  rd.keys(root, {"plant", "nodes", "edges", "links", "sim", "disturbances", "tuning"}, "scenario");

  const YAML::Node plant_node = rd.require(root, "plant", "scenario");
  rd.keys(plant_node, {"A", "B"}, "plant");
  PlantModel plant;
  plant.A = rd.matrix(rd.require(plant_node, "A", "plant"), "plant.A");
  plant.B = rd.matrix(rd.require(plant_node, "B", "plant"), "plant.B");

  const YAML::Node nodes_node = rd.require(root, "nodes", "scenario");
  if (!nodes_node.IsSequence() || nodes_node.size() == 0) rd.fail(nodes_node, "nodes must be a non-empty list");
  std::vector<NodeModel> nodes;
  std::vector<Matrix> K0;
  for (std::size_t k = 0; k < nodes_node.size(); ++k) {
    const YAML::Node v = nodes_node[k];
    const std::string where = "nodes[" + std::to_string(k) + "]";
    rd.keys(v, {"C", "D", "xi", "Xcal", "K0"}, where);
    NodeModel node;
    node.C = rd.matrix(rd.require(v, "C", where), where + ".C");
    node.D = rd.matrix(rd.require(v, "D", where), where + ".D");
    node.xi = rd.vector(rd.require(v, "xi", where), where + ".xi");
    node.Xcal = rd.matrix(rd.require(v, "Xcal", where), where + ".Xcal");
    if (v["K0"]) {
      if (K0.size() != k) rd.fail(v, "K0 must be given for every node or none");
      K0.push_back(rd.matrix(v["K0"], where + ".K0"));
    } else if (!K0.empty()) {
      rd.fail(v, "K0 must be given for every node or none");
    }
    nodes.push_back(std::move(node));
  }

  std::vector<Edge> edges;
  const YAML::Node edges_node = root["edges"];
  if (edges_node) {
    if (!edges_node.IsSequence()) rd.fail(edges_node, "edges must be a list of pairs");
    for (std::size_t k = 0; k < edges_node.size(); ++k) edges.push_back(rd.edge(edges_node[k], "edge"));
  }

  const YAML::Node links_node = root["links"];
  std::optional<NeighborLink> default_link;
  std::map<Edge, NeighborLink> overrides;
  if (links_node) {
    rd.keys(links_node, {"default", "overrides"}, "links");
    if (const YAML::Node d = links_node["default"]) {
      rd.keys(d, {"W", "F", "Z"}, "links.default");
      default_link = rd.link(d, nullptr, "links.default");
    }
    if (const YAML::Node o = links_node["overrides"]) {
      if (!o.IsSequence()) rd.fail(o, "links.overrides must be a list");
      for (std::size_t k = 0; k < o.size(); ++k) {
        const std::string where = "links.overrides[" + std::to_string(k) + "]";
        rd.keys(o[k], {"edge", "W", "F", "Z"}, where);
        const Edge e = rd.edge(rd.require(o[k], "edge", where), where + ".edge");
        if (overrides.count(e)) rd.fail(o[k], "duplicate override for edge");
        overrides[e] = rd.link(o[k], default_link ? &*default_link : nullptr, where);
      }
    }
  }
  for (const Edge& e : edges) {
    if (e.first < 1 || e.first > static_cast<int>(nodes.size())) continue;  // reported by the model
    const auto it = overrides.find(e);
    if (it != overrides.end()) {
      nodes[static_cast<std::size_t>(e.first - 1)].links[e.second] = it->second;
    } else if (default_link) {
      nodes[static_cast<std::size_t>(e.first - 1)].links[e.second] = *default_link;
    } else {
      rd.fail(edges_node, "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                              ") has no link matrices and there is no default");
    }
  }
  for (const auto& [e, link] : overrides) {
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) {
      rd.fail(links_node, "override for (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                              ") which is not an edge");
    }
  }

  Scenario s;
  try {
    s.network = build_network(std::move(plant), std::move(nodes), std::move(edges));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    rd.fail(root, std::string(to_string(e.code())) + ": " + e.what());
  }
  s.K0 = std::move(K0);
  const Index n = s.network.state_dim();

  const YAML::Node sim = rd.require(root, "sim", "scenario");
  rd.keys(sim, {"T", "dt", "seed", "x0"}, "sim");
  s.horizon = rd.number(rd.require(sim, "T", "sim"), "sim.T");
  s.dt = rd.number(rd.require(sim, "dt", "sim"), "sim.dt");
  if (!(s.dt > 0.0) || !(s.horizon > 0.0)) rd.fail(sim, "sim.T and sim.dt must be positive");
  try {
    s.grid();
  } catch (const Error& e) {
    rd.fail(sim, e.what());
  }
  if (sim["seed"]) s.seed = rd.unsigned_integer(sim["seed"], "sim.seed");
  const YAML::Node x0 = rd.require(sim, "x0", "sim");
  rd.keys(x0, {"fixed", "gaussian"}, "sim.x0");
  if (x0["fixed"] && !x0["gaussian"]) {
    const Vector v = rd.vector(x0["fixed"], "sim.x0.fixed");
    if (v.size() != n) rd.fail(x0["fixed"], "sim.x0.fixed has wrong length");
    s.x0_law = FixedInitialState{v};
  } else if (x0["gaussian"] && !x0["fixed"]) {
    const YAML::Node g = x0["gaussian"];
    rd.keys(g, {"mean", "std"}, "sim.x0.gaussian");
    GaussianInitialState law;
    law.mean = rd.vector(rd.require(g, "mean", "sim.x0.gaussian"), "mean");
    law.stddev = rd.number(rd.require(g, "std", "sim.x0.gaussian"), "std");
    if (law.mean.size() != 1 && law.mean.size() != n) rd.fail(g, "sim.x0.gaussian.mean has wrong length");
    if (!(law.stddev >= 0.0)) rd.fail(g, "sim.x0.gaussian.std must be >= 0");
    s.x0_law = law;
  } else {
    rd.fail(x0, "sim.x0 needs exactly one of fixed, gaussian");
  }

  if (const YAML::Node d = root["disturbances"]) {
    if (!d.IsSequence()) rd.fail(d, "disturbances must be a list");
    for (std::size_t k = 0; k < d.size(); ++k) s.disturbances.push_back(parse_disturbance(rd, d[k], k));
    try {
      DisturbanceField(s.network, s.disturbances, s.grid(), s.seed);
    } catch (const Error& e) {
      rd.fail(d, e.what());
    }
  }

  if (const YAML::Node t = root["tuning"]) {
    rd.keys(t, {"P0", "ridge", "P", "mode", "Minv"}, "tuning");
    TuningConfig cfg;
    if (t["P0"]) cfg.P0 = rd.matrix(t["P0"], "tuning.P0");
    if (t["ridge"]) cfg.ridge = rd.number(t["ridge"], "tuning.ridge");
    if (t["P"]) cfg.P = rd.matrix(t["P"], "tuning.P");
    if (t["mode"]) {
      const std::string mode = rd.text(t["mode"], "tuning.mode");
      if (mode == "per_node") {
        cfg.mode = ScalarMode::per_node;
      } else if (mode == "uniform") {
        cfg.mode = ScalarMode::uniform;
      } else {
        rd.fail(t["mode"], "tuning.mode must be per_node or uniform");
      }
    }
    try {
      cfg.weighting(s.network);
    } catch (const Error& e) {
      rd.fail(t, e.what());
    }
    // A section holding only M^-1 blocks carries no search configuration.
    if (t.size() > (t["Minv"] ? 1u : 0u)) s.tuning = cfg;
    if (const YAML::Node m = t["Minv"]) {
      if (!m.IsSequence() || m.size() != static_cast<std::size_t>(s.network.size())) {
        rd.fail(m, "tuning.Minv must list one block per node");
      }
      for (std::size_t k = 0; k < m.size(); ++k) {
        Matrix block = rd.matrix(m[k], "tuning.Minv[" + std::to_string(k) + "]");
        if (block.rows() != n || block.cols() != n) rd.fail(m[k], "tuning.Minv block has wrong shape");
        if (!is_symmetric(block) || min_eigenvalue(block) < -kDefinitenessTol * (1.0 + block.norm())) {
          rd.fail(m[k], "tuning.Minv block must be symmetric positive semidefinite");
        }
        s.Minv.push_back(std::move(block));
      }
    }
  }
  for (std::size_t k = 0; k < s.K0.size(); ++k) {
    if (s.K0[k].rows() != n || s.K0[k].cols() != n || !is_positive_definite(s.K0[k])) {
      rd.fail(nodes_node[k], "K0 must be symmetric positive definite n x n");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text(path), path.string());
}

namespace {

std::string row(const Eigen::Ref<const Vector>& v) {
  std::string out = "[";
  for (Index k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += format_number(v(k));
  }
  return out + "]";
}

std::string matrix(const Matrix& m) {
  std::string out = "[";
  for (Index r = 0; r < m.rows(); ++r) {
    if (r) out += ", ";
    out += row(m.row(r).transpose());
  }
  return out + "]";
}

const char* target_name(Channel c) {
  switch (c) {
    case Channel::model: return "w";
    case Channel::measurement: return "v";
    case Channel::communication: return "eps";
  }
  return "?";
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  const Network& net = s.network;
  os << "plant:\n"
     << "  A: " << matrix(net.plant().A) << "\n"
     << "  B: " << matrix(net.plant().B) << "\n"
     << "nodes:\n";
  for (int i = 1; i <= net.size(); ++i) {
    const NodeModel& node = net.node(i);
    os << "  - C: " << matrix(node.C) << "\n"
       << "    D: " << matrix(node.D) << "\n"
       << "    xi: " << row(node.xi) << "\n"
       << "    Xcal: " << matrix(node.Xcal) << "\n";
    if (!s.K0.empty()) os << "    K0: " << matrix(s.K0.at(static_cast<std::size_t>(i - 1))) << "\n";
  }
  os << "edges: [";
  for (std::size_t k = 0; k < net.edges().size(); ++k) {
    os << (k ? ", " : "") << "[" << net.edges()[k].first << ", " << net.edges()[k].second << "]";
  }
  os << "]\n";
  if (!net.edges().empty()) {
    os << "links:\n  overrides:\n";
    for (const auto& [i, j] : net.edges()) {
      const NeighborLink& link = net.node(i).links.at(j);
      os << "    - edge: [" << i << ", " << j << "]\n"
         << "      W: " << matrix(link.W) << "\n"
         << "      F: " << matrix(link.F) << "\n"
         << "      Z: " << matrix(link.Z) << "\n";
    }
  }
  os << "sim:\n"
     << "  T: " << format_number(s.horizon) << "\n"
     << "  dt: " << format_number(s.dt) << "\n"
     << "  seed: " << s.seed << "\n";
  if (const auto* fixed = std::get_if<FixedInitialState>(&s.x0_law)) {
    os << "  x0:\n    fixed: " << row(fixed->x0) << "\n";
  } else {
    const auto& g = std::get<GaussianInitialState>(s.x0_law);
    os << "  x0:\n    gaussian:\n      mean: " << row(g.mean) << "\n      std: " << format_number(g.stddev) << "\n";
  }
  if (!s.disturbances.empty()) {
    os << "disturbances:\n";
    for (const DisturbanceSpec& d : s.disturbances) {
      os << "  - target: " << target_name(d.target.channel) << "\n"
         << "    node: " << d.target.node << "\n"
         << "    from: " << d.target.from << "\n";
      if (const auto* p = std::get_if<Pulse>(&d.signal)) {
        os << "    pulse:\n      amplitude: " << row(p->amplitude) << "\n"
           << "      start: " << format_number(p->start) << "\n"
           << "      duration: " << format_number(p->duration) << "\n";
      } else if (const auto* g = std::get_if<HeldGaussian>(&d.signal)) {
        os << "    held_gaussian:\n      mean: " << format_number(g->mean) << "\n"
           << "      std: " << format_number(g->stddev) << "\n"
           << "      hold: " << format_number(g->hold) << "\n"
           << "      seed: " << g->seed << "\n"
           << "      start: " << format_number(g->start) << "\n"
           << "      duration: " << format_number(g->duration) << "\n";
      } else {
        os << "    zero: true\n";
      }
    }
  }
  if (s.tuning || !s.Minv.empty()) os << "tuning:\n";
  if (s.tuning) {
    const TuningConfig& t = *s.tuning;
    if (t.P0.size() != 0) os << "  P0: " << matrix(t.P0) << "\n";
    os << "  ridge: " << format_number(t.ridge) << "\n";
    if (t.P.size() != 0) os << "  P: " << matrix(t.P) << "\n";
    os << "  mode: " << (t.mode == ScalarMode::uniform ? "uniform" : "per_node") << "\n";
  }
  {
    if (!s.Minv.empty()) {
      os << "  Minv:\n";
      for (const Matrix& m : s.Minv) os << "    - " << matrix(m) << "\n";
    }
  }
  return os.str();
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  write_text(path, serialize_scenario(scenario));
}

}  // namespace dmef
