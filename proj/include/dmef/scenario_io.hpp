#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dmef/sim.hpp"

namespace dmef {

/// Parses the structured scenario text. Unknown keys, ragged matrix rows and
/// wrong types raise ParseError with the 1-based line and column; model
/// validation failures are reported as ParseError at the offending section.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text form: every link is written per edge, numbers with 17
/// significant digits, so parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// "%.17g".
std::string format_number(double value);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dmef
