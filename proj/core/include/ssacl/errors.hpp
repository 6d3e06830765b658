#pragma once

#include <stdexcept>
#include <string>

namespace ssacl {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system level failures: missing files, short reads, failed writes.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents (WAV encodings, manifests, caches).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A signal that is identically zero where a nonzero one is required.
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
};

/// Index, offset, fold or label outside its valid range.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward without a recorded forward pass, or a
/// non-finite parameter detected after an optimizer step.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssacl
