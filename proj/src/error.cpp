#include "dmef/error.hpp"

#include <sstream>

namespace dmef {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::InvalidTopology: return "InvalidTopology";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::LostPositivity: return "LostPositivity";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::SingularGain: return "SingularGain";
    case ErrorCode::MissingNeighborSignal: return "MissingNeighborSignal";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SelfLoop::SelfLoop(int node)
    : Error(ErrorCode::SelfLoop, "edge (" + std::to_string(node) + "," + std::to_string(node) + ")"),
      node_(node) {}

namespace {

std::string describe(const std::string& which, double value) {
  std::ostringstream os;
  os << which << " (min eigenvalue " << value << ")";
  return os.str();
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::string which, double min_eigenvalue)
    : Error(ErrorCode::NotPositiveDefinite, describe(which, min_eigenvalue)),
      which_(std::move(which)),
      min_eigenvalue_(min_eigenvalue) {}

LostPositivity::LostPositivity(int node, double time, double min_eigenvalue)
    : Error(ErrorCode::LostPositivity,
            [&] {
              std::ostringstream os;
              os << "gain of node " << node << " at t=" << time << " (min eigenvalue "
                 << min_eigenvalue << ")";
              return os.str();
            }()),
      node_(node),
      time_(time),
      min_eigenvalue_(min_eigenvalue) {}

NonFinite::NonFinite(std::string what, double time)
    : Error(ErrorCode::NonFinite,
            [&] {
              std::ostringstream os;
              os << what << " at t=" << time;
              return os.str();
            }()),
      time_(time) {}

Infeasible::Infeasible(double mu_lo, double mu_hi, const std::string& detail)
    : Error(ErrorCode::Infeasible,
            [&] {
              std::ostringstream os;
              os << detail << " (mu_lo=" << mu_lo << ", mu_hi=" << mu_hi << ")";
              return os.str();
            }()),
      mu_lo_(mu_lo),
      mu_hi_(mu_hi) {}

ParseError::ParseError(std::string origin, int line, int column, const std::string& detail)
    : Error(ErrorCode::Parse,
            [&] {
              std::ostringstream os;
              os << origin;
              if (line > 0) os << ":" << line << ":" << column;
              os << ": " << detail;
              return os.str();
            }()),
      line_(line),
      column_(column) {}

}  // namespace dmef
