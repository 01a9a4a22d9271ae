#pragma once

#include <stdexcept>
#include <string>

namespace lmstat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. d outside (-1/2, 3/2)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A series or constant carries no information (zero variance, c(d) = 0, ...).
class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A configuration or invocation is malformed.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File-system failures, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmstat
