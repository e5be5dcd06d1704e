#pragma once

#include <stdexcept>
#include <string>

namespace cmvlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (|alpha| >= 1, nu <= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or incomplete configuration (schedules, experiments, SDE grids).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Floating-point breakdown detected at run time.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmvlab
