#pragma once

#include <stdexcept>
#include <string>

namespace styler {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad channel count, negative
/// sigma, out-of-range parameter, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The object is not in a state that allows the operation (e.g. restoring
/// color without stashed chroma).
class StateError : public Error {
 public:
  using Error::Error;
};

/// A file or wire payload does not follow its declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A reference (model name, texture directory, ...) cannot be resolved.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical state is unusable (non-finite training statistics).
class CorruptState : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace styler
