#include "dmef/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmef/error.hpp"
#include "dmef/run_io.hpp"
#include "dmef/scenario_io.hpp"
#include "dmef/sim.hpp"
#include "dmef/tuning.hpp"

namespace dmef {

namespace fs = std::filesystem;

void write_hinf_report(const fs::path& dir, const HinfReport& r) {
  std::ostringstream os;
  os << "lhs = " << format_number(r.lhs) << "\n"
     << "rhs = " << format_number(r.rhs) << "\n"
     << "slack = " << format_number(r.slack) << "\n"
     << "budget.initial = " << format_number(r.budget.initial) << "\n"
     << "budget.model = " << format_number(r.budget.model) << "\n"
     << "budget.measurement = " << format_number(r.budget.measurement) << "\n"
     << "budget.communication = " << format_number(r.budget.communication) << "\n"
     << "hypotheses_verified = " << (r.hypotheses_verified ? "true" : "false") << "\n"
     << "note = finite-horizon partial integral; the tail beyond T is not included\n";
  for (const auto& w : r.warnings) os << "warning = " << w << "\n";
  write_text(dir / "hinf_report.txt", os.str());

  nlohmann::ordered_json j;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["budget"] = {{"initial", r.budget.initial},
                 {"model", r.budget.model},
                 {"measurement", r.budget.measurement},
                 {"communication", r.budget.communication}};
  j["hypotheses_verified"] = r.hypotheses_verified;
  j["warnings"] = r.warnings;
  write_text(dir / "hinf_report.json", j.dump(2) + "\n");
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible:
      return kExitInfeasible;
    case ErrorCode::LostPositivity:
    case ErrorCode::NonFinite:
    case ErrorCode::NotStabilizable:
    case ErrorCode::NoStabilizingSolution:
    case ErrorCode::SingularGain:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

// Plain numeric matrix: one row per line, entries separated by commas or blanks.
Matrix read_matrix_file(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream cells(line);
    std::vector<double> row;
    std::string cell;
    while (cells >> cell) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size()) throw ParseError(path.string(), lineno, 1, "not a number: '" + cell + "'");
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string(), lineno, 1, "ragged matrix row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string(), 0, 0, "empty matrix file");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return m;
}

void print_tuning(std::ostream& out, const TuningResult& t) {
  out << "mode: " << (t.mode == ScalarMode::uniform ? "uniform" : "per_node") << "\n"
      << "mu_lo: " << format_number(t.mu_lo) << "\n"
      << "theta_lo: " << format_number(t.theta_lo) << "\n"
      << "theta: " << format_number(t.theta) << "\n"
      << "coupling margin: " << format_number(t.minv_margin) << "\n";
  for (std::size_t k = 0; k < t.mu.size(); ++k) {
    out << "node " << k + 1 << ": mu = " << format_number(t.mu[k])
        << ", mu_max = " << format_number(t.mu_max[k])
        << ", LMI margin = " << format_number(t.certificates[k].lmi_margin) << "\n";
  }
}

double tail_error(const Trajectories& tr, int id, double from) {
  double worst = 0.0;
  for (std::size_t k = 0; k <= tr.grid.steps; ++k) {
    if (tr.grid.at(k) < from - 1e-9 * tr.grid.dt) continue;
    worst = std::max(worst, tr.error(id, k).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

Matrix verification_weighting(const Scenario& s, const std::string& choice) {
  const Network& net = s.network;
  if (choice == "laplacian") {
    if (s.tuning) return s.tuning->weighting(net);
    return laplacian_P(net, Matrix::Identity(net.state_dim(), net.state_dim()), 0.0);
  }
  const Matrix P = read_matrix_file(choice);
  const Index size = net.state_dim() * net.size();
  require_shape(P, size, size, "P");
  require_symmetric(P, "P");
  return P;
}

int cmd_tune(const std::string& path, const std::string& out_path, double p_scale, const std::string& mode,
             std::ostream& out) {
  Scenario s = load_scenario(path);
  if (!s.tuning) throw Error(ErrorCode::InvalidArgument, "scenario has no tuning section");
  if (!mode.empty()) s.tuning->mode = mode == "uniform" ? ScalarMode::uniform : ScalarMode::per_node;
  if (p_scale != 1.0) {
    if (!(p_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "--p-scale must be positive");
    s.tuning->P = p_scale * s.tuning->weighting(s.network);
  }
  const TuningResult result = tune_scenario(s);
  print_tuning(out, result);
  save_scenario(s, out_path);
  out << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<double> dt, std::ostream& out, std::ostream& err) {
  Scenario s = load_scenario(path);
  if (seed) s.seed = *seed;
  if (dt) {
    s.dt = *dt;
    s.grid();
  }
  if (s.Minv.empty()) {
    if (!s.tuning) throw Error(ErrorCode::InvalidArgument, "scenario has neither M^-1 blocks nor a tuning section");
    const TuningResult t = tune_scenario(s);
    out << "tuned inline, coupling margin " << format_number(t.minv_margin) << "\n";
  }
  const Trajectories tr = simulate(s);
  for (const auto& w : tr.field->warnings()) err << "warning: " << w << "\n";
  write_run(out_dir, s, tr);
  double final_error = 0.0;
  for (int i = 1; i <= tr.nodes(); ++i) final_error = std::max(final_error, tr.error(i, tr.grid.steps).norm());
  out << "final max_i ||e_i(T)||: " << format_number(final_error) << "\n"
      << "min gain eigenvalue: " << format_number(tr.meta.min_gain_eigenvalue) << "\n"
      << "wrote " << out_dir << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& dir, const std::string& p_choice, std::ostream& out, std::ostream& err) {
  const LoadedRun run = read_run(dir);
  const Matrix P = verification_weighting(run.scenario, p_choice);
  HinfReport r = check_hinf(run.scenario.network, run.traj, P);
  // The stored error files are what is being certified.
  r.lhs = lhs_cost(run.errors, run.traj.grid, P);
  r.slack = r.rhs - r.lhs;
  r.warnings.insert(r.warnings.end(), run.warnings.begin(), run.warnings.end());
  write_hinf_report(dir, r);
  out << "lhs: " << format_number(r.lhs) << "\n"
      << "rhs: " << format_number(r.rhs) << "\n"
      << "slack: " << format_number(r.slack) << "\n";
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  return r.slack >= 0.0 ? kExitOk : kExitVerification;
}

int cmd_reproduce_chua(const std::string& out_dir, int seeds, std::uint64_t base, std::ostream& out) {
  if (seeds < 1) throw Error(ErrorCode::InvalidArgument, "--seeds must be >= 1");
  const fs::path root(out_dir);
  try {
    fs::create_directories(root);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::Io, std::string("cannot create output directory: ") + e.what());
  }

  std::ostringstream summary;
  summary << "seed";
  for (int i = 1; i <= 5; ++i) summary << ",tail_e" << i;
  summary << ",converged,hinf_lhs,hinf_rhs,hinf_slack,isolated_tail_e1,isolation_ratio\n";

  bool ok = true;
  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(k);
    Scenario s = make_chua_scenario(seed);
    if (k == 0) {
      std::ostringstream tuning;
      Scenario copy = s;
      print_tuning(tuning, tune_scenario(copy));
      write_text(root / "tuning.txt", tuning.str());
    }
    const Trajectories tr = simulate(s);
    const fs::path run_dir = root / ("seed_" + std::to_string(seed));
    write_run(run_dir, s, tr);
    const HinfReport r = check_hinf(s.network, tr, s.tuning->weighting(s.network));
    write_hinf_report(run_dir, r);

    const Trajectories iso = simulate(isolate_node(s, 1), tr.field, tr.x0);
    const double iso_tail = tail_error(iso, 1, 9.0);

    summary << seed;
    bool converged = true;
    for (int i = 1; i <= s.network.size(); ++i) {
      const double tail = tail_error(tr, i, 9.0);
      converged = converged && tail <= 1e-2;
      summary << "," << format_number(tail);
    }
    const double net_tail = tail_error(tr, 1, 9.0);
    summary << "," << (converged ? 1 : 0) << "," << format_number(r.lhs) << ","
            << format_number(r.rhs) << "," << format_number(r.slack) << "," << format_number(iso_tail) << ","
            << format_number(net_tail > 0.0 ? iso_tail / net_tail : INFINITY) << "\n";
    ok = ok && converged && r.slack >= 0.0;

    std::vector<std::string> header{"t"};
    Matrix fig(static_cast<Index>(tr.grid.steps + 1), s.network.size() + 1);
    for (std::size_t j = 0; j <= tr.grid.steps; ++j) fig(static_cast<Index>(j), 0) = tr.grid.at(j);
    for (int i = 1; i <= s.network.size(); ++i) {
      header.push_back("e" + std::to_string(i) + "_1");
      fig.col(i) = tr.errors(i).row(0).transpose();
    }
    write_text(root / ("fig1_seed_" + std::to_string(seed) + ".csv"), format_csv(header, fig));
    out << "seed " << seed << ": converged=" << (converged ? "true" : "false")
        << " slack=" << format_number(r.slack) << " isolated/networked=" << format_number(iso_tail / net_tail)
        << "\n";
  }
  write_text(root / "summary.csv", summary.str());
  out << "wrote " << (root / "summary.csv").string() << "\n";
  return ok ? kExitOk : kExitVerification;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed minimum-energy H-infinity filtering: tuning, simulation and verification", "dmef"};
  app.require_subcommand(1);

  std::string scenario_path, out_path = "tuned.yaml", mode;
  double p_scale = 1.0;
  auto* tune = app.add_subcommand("tune", "Search M_i^-1 = mu_i I with certified margins");
  tune->add_option("scenario", scenario_path, "Scenario file")->required();
  tune->add_option("--out", out_path, "Tuned scenario file to write");
  tune->add_option("--p-scale", p_scale, "Multiply the weighting P by this factor");
  tune->add_option("--mode", mode, "per_node or uniform")->check(CLI::IsMember({"per_node", "uniform"}));

  std::string sim_path, sim_out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  auto* sim = app.add_subcommand("simulate", "Run plant, filters and gains; write CSV trajectories");
  sim->add_option("scenario", sim_path, "Scenario file")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--dt", dt, "Override the step size");

  std::string verify_dir, p_choice = "laplacian";
  auto* verify = app.add_subcommand("verify", "Check the attenuation inequality on a run directory");
  verify->add_option("dir", verify_dir, "Run directory")->required();
  verify->add_option("--P", p_choice, "laplacian or a numeric matrix file");

  std::string chua_out;
  int seeds = 10;
  std::uint64_t base = 1;
  auto* chua = app.add_subcommand("reproduce-chua", "Tune, simulate and verify the Chua network");
  chua->add_option("--out", chua_out, "Output directory")->required();
  chua->add_option("--seeds", seeds, "Number of seeds");
  chua->add_option("--seed", base, "First seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*tune) return cmd_tune(scenario_path, out_path, p_scale, mode, out);
    if (*sim) return cmd_simulate(sim_path, sim_out, seed, dt, out, err);
    if (*verify) return cmd_verify(verify_dir, p_choice, out, err);
    if (*chua) return cmd_reproduce_chua(chua_out, seeds, base, out);
  } catch (const Infeasible& e) {
    err << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace dmef
