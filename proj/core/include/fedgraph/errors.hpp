#pragma once

#include <stdexcept>
#include <string>

namespace fedgraph {

/// Root of all library exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, out-of-range values, shape mismatches.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Configuration schema violations. `path` names the offending key.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string path, const std::string& what)
      : ValidationError(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Numerical failures: singular systems, non-convergence, non-PD metrics.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedgraph
