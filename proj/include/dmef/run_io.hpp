#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmef/sim.hpp"

namespace dmef {

inline constexpr const char* kVersion = "0.1.0";

/// Writes a run directory:
///   scenario.yaml               resolved scenario (tuned M^-1, effective seed)
///   state.csv                   t, x
///   node_<i>_estimate.csv       t, xhat_i
///   node_<i>_error.csv          t, e_i
///   node_<i>_gain.csv           t, K_i row-major
///   disturbance_begin.csv       t_k and every channel from the right at t_k
///   disturbance_end.csv         t_{k+1} and every channel from the left
///   manifest.json
/// Creates the directory if needed.
void write_run(const std::filesystem::path& dir, const Scenario& scenario, const Trajectories& traj);

struct Manifest {
  std::string version;
  std::uint64_t seed = 0;
  std::string scenario_hash;  // FNV-1a of scenario.yaml, 16 hex digits
  Vector x0;
  std::optional<double> minv_margin;
  double min_gain_eigenvalue = 0.0;
  double max_gain_eigenvalue = 0.0;
};

struct LoadedRun {
  Scenario scenario;
  Manifest manifest;
  Trajectories traj;        // x, xhat, K, disturbances and meta from the files
  Matrix errors;            // nN x (steps+1) as stored in node_<i>_error.csv
  std::vector<std::string> warnings;
};

/// Reads back a run directory. Missing or malformed files raise Io or
/// ParseError; a scenario.yaml whose hash differs from the manifest and error
/// files that disagree with estimate - state produce warnings.
LoadedRun read_run(const std::filesystem::path& dir);

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;  // one row per data line
};

std::string format_csv(const std::vector<std::string>& header, const Matrix& rows);
CsvTable parse_csv(const std::string& text, const std::string& origin);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dmef
