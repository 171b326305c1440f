#pragma once

#include <stdexcept>
#include <string>

namespace subgradfed {

enum class ErrorKind {
  Config,            // invalid parameters or schema violations
  Dimension,         // vector/matrix size mismatch
  DegenerateOracle,  // zero subgradient away from the optimum
  Divergence,        // non-finite iterate or loss
  Io,                // file system failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error(ErrorKind::Dimension, message) {}
};

class DegenerateOracleError : public Error {
 public:
  explicit DegenerateOracleError(const std::string& message)
      : Error(ErrorKind::DegenerateOracle, message) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, long round)
      : Error(ErrorKind::Divergence, message), round_(round) {}

  long round() const noexcept { return round_; }

 private:
  long round_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

}  // namespace subgradfed
