#pragma once

#include <filesystem>
#include <iosfwd>

#include "dmef/verify.hpp"

namespace dmef {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,        // usage, parse and I/O errors
  kExitInfeasible = 2,   // tuning found no admissible M
  kExitNumerical = 3,    // integration or Riccati failure
  kExitVerification = 4, // attenuation inequality violated
};

/// Entry point of the `dmef` tool: tune, simulate, verify, reproduce-chua.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes hinf_report.txt (key = value) and hinf_report.json into dir.
void write_hinf_report(const std::filesystem::path& dir, const HinfReport& report);

}  // namespace dmef
