#pragma once

#include <stdexcept>
#include <string>

namespace lnf {

// Error taxonomy. CLI maps any of these to exit code 1; argument/usage
// problems map to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

// Carries the residual that was actually achieved when a solve gave up.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& msg, double achieved_residual = -1.0)
      : Error(msg), residual(achieved_residual) {}
  double residual;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lnf
