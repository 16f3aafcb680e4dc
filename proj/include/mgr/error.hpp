#pragma once

#include <stdexcept>
#include <string>

namespace mgr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition (degenerate box, bad label...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Matrix dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Annotation or feature data is inconsistent (dangling ref, wrong keypoint count).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Binary or JSON container is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Degree normalization hit a zero-degree node.
class SingularDegree : public Error {
 public:
  using Error::Error;
};

/// Loss became non-finite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace mgr
