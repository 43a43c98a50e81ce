#ifndef EVTUPLE_ERRORS_H_
#define EVTUPLE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace evtuple {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments to a pure operation (bad spans, empty sentences).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A label that is not part of the LabelSchema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A file that does not parse; carries the 1-based line when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Inconsistent configuration (bad batch settings, unknown config keys).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Prediction and gold files that do not align by sentence identifier.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Checkpoint that is truncated, corrupted or written by another version.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace evtuple

#endif  // EVTUPLE_ERRORS_H_
