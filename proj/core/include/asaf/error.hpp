#ifndef ASAF_ERROR_HPP_
#define ASAF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace asaf {

// Root of every error raised by the library. Each subclass names one failure
// category so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad scalar argument or out-of-range index.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Vector length does not match the network/policy dimensions.
class ShapeError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Backward pass requested against a tape from a different or modified net.
class TapeError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed model objects: MDPs, demo sets, env/demo mismatch.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operation not permitted in the object's current state (e.g. step after done).
class StateError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration would exceed the size guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Requested combination is not supported (e.g. ASQF on continuous actions).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// TrainConfig invariants violated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Run-config text could not be parsed. Carries the 1-based line number.
class ParseError : public ConfigError {
 public:
  ParseError(int line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Corrupt demo file or checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace asaf

#endif  // ASAF_ERROR_HPP_
