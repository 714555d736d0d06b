#pragma once

#include <stdexcept>
#include <string>

namespace videostf {

// Error taxonomy shared across the library. The CLI maps these onto its
// exit codes: ConfigError -> 2, ValidationError -> 3, EmptyReportError -> 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A frame file whose content no longer matches its recorded digest.
class IntegrityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A transform plan applied to a sequence it was not built for.
class PlanMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An aggregation that selected no records at all.
class EmptyReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace videostf
