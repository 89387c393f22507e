#pragma once

#include <stdexcept>
#include <string>

namespace selftrig {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or unsupported matrix/vector shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (T <= 0, empty set, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A requested certificate or LMI has no solution for the given data.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Iterative numerics failed (eigenvalue iteration cap, non-finite state).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: scenario, certificate or policy files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace selftrig
