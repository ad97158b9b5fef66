#pragma once

#include <stdexcept>
#include <string>

namespace sketchmix {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or argument contract violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Sketch and frequency set (or two sketches) do not belong together.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a usable result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sketchmix
