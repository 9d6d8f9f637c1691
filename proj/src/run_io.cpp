#include "dmef/run_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "dmef/error.hpp"
#include "dmef/scenario_io.hpp"

namespace dmef {

namespace fs = std::filesystem;

std::string format_csv(const std::vector<std::string>& header, const Matrix& rows) {
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) out += ',';
    out += header[k];
  }
  out += '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) {
      if (c) out += ',';
      out += format_number(rows(r, c));
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> data;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) table.header.push_back(cell);
      if (table.header.empty()) throw ParseError(origin, 1, 1, "empty header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw ParseError(origin, lineno, static_cast<int>(pos) + 1, "not a number: '" + cell + "'");
      }
      values.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (values.size() != table.header.size()) {
      throw ParseError(origin, lineno, 1,
                       "expected " + std::to_string(table.header.size()) + " columns, found " +
                           std::to_string(values.size()));
    }
    data.push_back(std::move(values));
  }
  if (lineno == 0) throw ParseError(origin, 0, 0, "empty file");
  table.rows.resize(static_cast<Index>(data.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < data[r].size(); ++c) {
      table.rows(static_cast<Index>(r), static_cast<Index>(c)) = data[r][c];
    }
  }
  return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

namespace {

std::vector<std::string> columns(const std::string& time, const std::string& prefix, Index count) {
  std::vector<std::string> h{time};
  for (Index k = 1; k <= count; ++k) h.push_back(prefix + std::to_string(k));
  return h;
}

Matrix with_time(const Vector& t, const Matrix& samples) {
  Matrix out(samples.cols(), samples.rows() + 1);
  out.col(0) = t;
  out.rightCols(samples.rows()) = samples.transpose();
  return out;
}

// vec(K) is column-major; symmetric K makes it equal to row-major.
std::vector<std::string> gain_columns(Index n) {
  std::vector<std::string> h{"t"};
  for (Index r = 1; r <= n; ++r) {
    for (Index c = 1; c <= n; ++c) h.push_back("K" + std::to_string(r) + "_" + std::to_string(c));
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string node_file(int i, const char* what) {
  return "node_" + std::to_string(i) + "_" + what + ".csv";
}

Matrix samples_of(const CsvTable& table, const fs::path& path, Index expected_rows, Index expected_cols) {
  if (table.rows.rows() != expected_rows || table.rows.cols() != expected_cols + 1) {
    throw ParseError(path.string(), 0, 0,
                     "expected " + std::to_string(expected_rows) + " rows of " +
                         std::to_string(expected_cols + 1) + " columns");
  }
  return table.rows.rightCols(expected_cols).transpose();
}

}  // namespace

void write_run(const fs::path& dir, const Scenario& scenario, const Trajectories& traj) {
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::Io, std::string("cannot create output directory: ") + e.what());
  }
  const Index n = traj.state_dim();
  const auto cols = traj.x.cols();
  Vector t(cols);
  for (Index k = 0; k < cols; ++k) t(k) = traj.grid.at(static_cast<std::size_t>(k));

  const std::string resolved = serialize_scenario(scenario);
  write_text(dir / "scenario.yaml", resolved);
  write_text(dir / "state.csv", format_csv(columns("t", "x", n), with_time(t, traj.x)));
  for (int i = 1; i <= traj.nodes(); ++i) {
    const auto slot = static_cast<std::size_t>(i - 1);
    write_text(dir / node_file(i, "estimate"), format_csv(columns("t", "xhat", n), with_time(t, traj.xhat[slot])));
    write_text(dir / node_file(i, "error"), format_csv(columns("t", "e", n), with_time(t, traj.errors(i))));
    write_text(dir / node_file(i, "gain"), format_csv(gain_columns(n), with_time(t, traj.K[slot])));
  }

  std::vector<std::string> header{"t"};
  Index width = 0;
  for (const ChannelRecord& rec : traj.disturbances.channels) {
    for (Index k = 1; k <= rec.begin.rows(); ++k) header.push_back(rec.id.name() + "_" + std::to_string(k));
    width += rec.begin.rows();
  }
  const auto steps = static_cast<Index>(traj.grid.steps);
  Matrix begin(width, steps), end(width, steps);
  Index offset = 0;
  for (const ChannelRecord& rec : traj.disturbances.channels) {
    begin.middleRows(offset, rec.begin.rows()) = rec.begin;
    end.middleRows(offset, rec.end.rows()) = rec.end;
    offset += rec.begin.rows();
  }
  write_text(dir / "disturbance_begin.csv", format_csv(header, with_time(t.head(steps), begin)));
  header[0] = "t_end";
  write_text(dir / "disturbance_end.csv", format_csv(header, with_time(t.tail(steps), end)));

  nlohmann::ordered_json m;
  m["version"] = kVersion;
  m["seed"] = scenario.seed;
  m["scenario_hash"] = hex(fnv1a64(resolved));
  m["x0"] = std::vector<double>(traj.x0.data(), traj.x0.data() + traj.x0.size());
  m["T"] = traj.grid.horizon();
  m["dt"] = traj.grid.dt;
  m["steps"] = traj.grid.steps;
  m["nodes"] = traj.nodes();
  if (traj.meta.minv_margin) {
    m["minv_margin"] = *traj.meta.minv_margin;
  } else {
    m["minv_margin"] = nullptr;
  }
  m["min_gain_eigenvalue"] = traj.meta.min_gain_eigenvalue;
  m["max_gain_eigenvalue"] = traj.meta.max_gain_eigenvalue;
  if (traj.field) m["warnings"] = traj.field->warnings();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

LoadedRun read_run(const fs::path& dir) {
  LoadedRun run;
  const std::string resolved = read_text(dir / "scenario.yaml");
  run.scenario = parse_scenario(resolved, (dir / "scenario.yaml").string());

  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text(dir / "manifest.json"));
    run.manifest.version = m.at("version").get<std::string>();
    run.manifest.seed = m.at("seed").get<std::uint64_t>();
    run.manifest.scenario_hash = m.at("scenario_hash").get<std::string>();
    const auto x0 = m.at("x0").get<std::vector<double>>();
    run.manifest.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Index>(x0.size()));
    if (!m.at("minv_margin").is_null()) run.manifest.minv_margin = m.at("minv_margin").get<double>();
    run.manifest.min_gain_eigenvalue = m.at("min_gain_eigenvalue").get<double>();
    run.manifest.max_gain_eigenvalue = m.at("max_gain_eigenvalue").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "manifest.json").string(), 0, 0, e.what());
  }
  if (hex(fnv1a64(resolved)) != run.manifest.scenario_hash) {
    run.warnings.push_back("scenario.yaml does not match the manifest hash");
  }

  const Scenario& s = run.scenario;
  const Network& net = s.network;
  const Index n = net.state_dim();
  const int N = net.size();
  const TimeGrid grid = s.grid();
  const auto cols = static_cast<Index>(grid.steps + 1);
  if (run.manifest.x0.size() != n) throw ParseError((dir / "manifest.json").string(), 0, 0, "x0 has wrong length");

  Trajectories& tr = run.traj;
  tr.grid = grid;
  tr.x0 = run.manifest.x0;
  tr.meta.minv_margin = run.manifest.minv_margin;
  tr.meta.min_gain_eigenvalue = run.manifest.min_gain_eigenvalue;
  tr.meta.max_gain_eigenvalue = run.manifest.max_gain_eigenvalue;
  tr.x = samples_of(read_csv(dir / "state.csv"), dir / "state.csv", cols, n);
  run.errors.resize(n * N, cols);
  for (int i = 1; i <= N; ++i) {
    const fs::path est = dir / node_file(i, "estimate");
    const fs::path err = dir / node_file(i, "error");
    const fs::path gain = dir / node_file(i, "gain");
    tr.xhat.push_back(samples_of(read_csv(est), est, cols, n));
    tr.K.push_back(samples_of(read_csv(gain), gain, cols, n * n));
    run.errors.middleRows(n * (i - 1), n) = samples_of(read_csv(err), err, cols, n);
    const double dev = (run.errors.middleRows(n * (i - 1), n) - (tr.xhat.back() - tr.x)).cwiseAbs().maxCoeff();
    if (dev > 1e-9 * (1.0 + tr.x.cwiseAbs().maxCoeff())) {
      std::ostringstream os;
      os << node_file(i, "error") << " deviates from estimate - state by " << dev;
      run.warnings.push_back(os.str());
    }
  }

  const ChannelLayout layout(net);
  Index width = 0;
  for (std::size_t c = 0; c < layout.size(); ++c) width += layout.dim(c);
  const auto steps = static_cast<Index>(grid.steps);
  const Matrix begin = samples_of(read_csv(dir / "disturbance_begin.csv"), dir / "disturbance_begin.csv", steps, width);
  const Matrix end = samples_of(read_csv(dir / "disturbance_end.csv"), dir / "disturbance_end.csv", steps, width);
  tr.disturbances.grid = grid;
  Index offset = 0;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    tr.disturbances.channels.push_back(
        {layout.id(c), begin.middleRows(offset, layout.dim(c)), end.middleRows(offset, layout.dim(c))});
    offset += layout.dim(c);
  }
  return run;
}

}  // namespace dmef
