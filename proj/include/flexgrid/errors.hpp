#pragma once

#include <stdexcept>
#include <string>

namespace flexgrid {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation could not produce a result. CLI exit code 3.
class ComputationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class UnknownIdError : public InputError {
 public:
  using InputError::InputError;
};

class NonMonotonicTimestampError : public InputError {
 public:
  using InputError::InputError;
};

class ZeroBaseError : public InputError {
 public:
  using InputError::InputError;
};

class InvalidSpecError : public InputError {
 public:
  using InputError::InputError;
};

class UnknownParameterError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyUncertaintyError : public InputError {
 public:
  using InputError::InputError;
};

class NonConvergenceError : public ComputationError {
 public:
  NonConvergenceError(const std::string& what, double last_mismatch, int iterations);

  double last_mismatch() const noexcept { return last_mismatch_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_mismatch_;
  int iterations_;
};

class InsufficientDataError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

class IllConditionedError : public ComputationError {
 public:
  IllConditionedError(const std::string& what, double condition_number);

  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

class OriginInfeasibleError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

class MissingSensitivityRowError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

class AnchorMismatchError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

}  // namespace flexgrid
