#pragma once

#include <stdexcept>
#include <string>

namespace dcq {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: flags, argument ranges, mismatched shapes.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data on disk.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of an in-memory value was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcq
