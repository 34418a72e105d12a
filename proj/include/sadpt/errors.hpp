#pragma once

#include <stdexcept>
#include <string>

namespace sadpt {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain of the function it is passed to.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Step sizes, weights or couplings outside their admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Unsupported combination of geometry and stabilizer, or a malformed
/// experiment description.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A Markov chain without a unique stationary distribution.
class ErgodicityError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed its size guard.
class GuardError : public Error {
 public:
  using Error::Error;
};

namespace internal {

inline void check_same_size(long a, long b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

}  // namespace internal
}  // namespace sadpt
