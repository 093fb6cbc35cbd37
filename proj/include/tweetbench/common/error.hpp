#pragma once

#include <stdexcept>
#include <string>

namespace tweetbench {

/// Process exit codes shared by every command-line entry point.
enum class ExitCode : int {
  kSuccess = 0,
  kDataError = 2,
  kBackendError = 3,
  kConfigError = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed or inconsistent input data (files, records, labels, folds).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kDataError, what) {}
};

/// Invalid configuration: unknown names, out-of-range hyperparameters, bad grids.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfigError, what) {}
};

/// Model or encoder backend failure (missing checkpoint, divergence, untrained model).
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ExitCode::kBackendError, what) {}
};

class BackendError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Training produced a non-finite loss.
class DivergenceError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace tweetbench
