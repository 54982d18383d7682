#pragma once

#include <stdexcept>
#include <string>

namespace usmesh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract: malformed files, bad arguments,
/// mismatched shapes. The CLI maps this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedTypeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TruncationError : public ValidationError {
 public:
  TruncationError(std::size_t expected, std::size_t actual)
      : ValidationError("payload truncated: expected " + std::to_string(expected) +
                        " bytes, got " + std::to_string(actual)),
        expected_bytes(expected),
        actual_bytes(actual) {}

  std::size_t expected_bytes;
  std::size_t actual_bytes;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IntegrityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SpecMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Chamfer distance of an empty cloud.
class UndefinedDistanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace usmesh
