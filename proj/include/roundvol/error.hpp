#pragma once

#include <stdexcept>
#include <string>

namespace roundvol {

// Invalid parameters or inputs (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A point outside the open state interval (nu, mu).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A value outside the range of the scale function.
class RangeError : public std::range_error {
 public:
  explicit RangeError(const std::string& what) : std::range_error(what) {}
};

// A simulated path left the state interval and cannot be estimated from.
class ExitedPathError : public std::runtime_error {
 public:
  explicit ExitedPathError(const std::string& what) : std::runtime_error(what) {}
};

// A Monte Carlo experiment stopped before completion (CLI exit code 3).
class ExperimentAborted : public std::runtime_error {
 public:
  explicit ExperimentAborted(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace roundvol
