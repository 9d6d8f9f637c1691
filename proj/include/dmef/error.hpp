#pragma once

#include <stdexcept>
#include <string>

namespace dmef {

enum class ErrorCode {
  DimensionMismatch,
  SelfLoop,
  InvalidTopology,
  NotSymmetric,
  NotPositiveDefinite,
  LostPositivity,
  NonFinite,
  NotStabilizable,
  NoStabilizingSolution,
  PreconditionViolated,
  SingularGain,
  MissingNeighborSignal,
  Infeasible,
  InvalidArgument,
  Parse,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base of every exception thrown by the library. The code identifies the
/// failure class; the message carries the offending quantity.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SelfLoop : public Error {
 public:
  explicit SelfLoop(int node);
  int node() const noexcept { return node_; }

 private:
  int node_;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::string which, double min_eigenvalue);
  const std::string& which() const noexcept { return which_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  std::string which_;
  double min_eigenvalue_;
};

/// The Riccati solution left the positive definite cone.
class LostPositivity : public Error {
 public:
  LostPositivity(int node, double time, double min_eigenvalue);
  int node() const noexcept { return node_; }
  double time() const noexcept { return time_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  int node_;
  double time_;
  double min_eigenvalue_;
};

class NonFinite : public Error {
 public:
  NonFinite(std::string what, double time);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class Infeasible : public Error {
 public:
  Infeasible(double mu_lo, double mu_hi, const std::string& detail);
  double mu_lo() const noexcept { return mu_lo_; }
  double mu_hi() const noexcept { return mu_hi_; }

 private:
  double mu_lo_;
  double mu_hi_;
};

/// Structured-text parse failure; line and column are 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(std::string origin, int line, int column, const std::string& detail);
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace dmef
