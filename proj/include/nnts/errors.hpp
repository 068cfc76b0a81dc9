#pragma once

#include <stdexcept>
#include <string>

namespace nnts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter vector off the unit hypersphere, non-finite coefficient, ...
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (p > 1, theta > pi).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller misuse: empty sample, df = 0, reversed LRT arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnts
