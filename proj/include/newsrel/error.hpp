#pragma once

#include <stdexcept>
#include <string>

namespace newsrel {

// Input files that cannot be read as the expected format.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a schema invariant (duplicate id, bad label).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or impossible configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values reaching a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prediction sets whose ids do not line up.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric requested on data where it has no value (AUC with one class).
class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace newsrel
