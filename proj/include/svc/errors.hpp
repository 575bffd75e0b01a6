#pragma once

#include <stdexcept>
#include <string>

namespace svc {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: non-finite coordinates, malformed cells, shape violations on construction.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside its mathematical domain (phi <= 0, value on or outside bounds).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-conforming matrix/vector dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed for every jitter in the schedule.
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// Knot selection or filtering produced an unusable knot set.
class EmptyKnotError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run configuration (burn-in >= iterations, no usable locations, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Named column absent or file layout not as declared.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// File system failure, reported with the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace svc
