#pragma once

#include <stdexcept>
#include <string>

namespace hdk {

/// Malformed or inconsistent input data (parse errors, dimension
/// mismatches, corrupt model files). Maps to CLI exit code 1.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (bad flags, out-of-range parameters).
/// Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (solver divergence, degenerate spectra).
/// Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hdk
