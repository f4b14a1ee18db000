#pragma once

#include <stdexcept>
#include <string>

namespace plk {

/// Base of every error raised by the library. Callers that only need to
/// report can catch this; the harness maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold (bad rank, non-positive
/// variance, unknown area, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is numerically singular, or a covariance
/// lost positive semidefiniteness.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// No design satisfies the constraints.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// A simulated or integrated trajectory left the finite / bounded regime.
class Divergence : public Error {
 public:
  using Error::Error;
};

/// Scenario document could not be loaded or validated. `path` is the JSON
/// pointer of the offending value.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace plk
