#pragma once

#include <stdexcept>
#include <string>

namespace subdetector {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration. The CLI maps this family to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed input data. Exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

// Divergence or non-finite values during optimization. Exit code 3.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not conform for a primitive.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Prior graph cannot be built with the requested parameters.
class GraphError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A metric is undefined for the given labels (e.g. a single class).
class MetricError : public DataError {
 public:
  using DataError::DataError;
};

// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace subdetector
