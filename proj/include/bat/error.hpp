#pragma once

#include <stdexcept>
#include <string>

namespace bat {

// Error taxonomy. The CLI maps these onto its exit codes:
// ConfigError -> 1, DataError -> 2, NumericalError -> 3.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two feature vectors (or tensors) cannot be compared because their shapes
/// or layouts differ. For MAC this is the meaningful "n/a" outcome.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void throw_data(const std::string& what);
[[noreturn]] void throw_dimension(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace bat
