#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fes {

/// Dimension mismatch between tensors, layers or windows.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss or gradient during optimisation.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model or scenario parameter (e.g. sigma <= 0).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// API misuse such as replaying a consumed tape.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration file or command-line value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No feasible placement exists for `device`.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::size_t device, const std::string& what)
      : std::runtime_error(what), device_(device) {}
  std::size_t device() const noexcept { return device_; }

 private:
  std::size_t device_;
};

}  // namespace fes
