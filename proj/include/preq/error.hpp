#pragma once

#include <stdexcept>
#include <string>

namespace preq {

// Base class for every error raised by the library. The CLI maps these to
// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside (or on the boundary of) an open domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Outcome outside the alphabet of a family.
class SupportError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the requested family / prior / code.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (empty grid, bad hyperparameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (data files, CSV, source specs).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Bitstream framing problems: bad magic, unknown family id, short header.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload that cannot be decoded to the announced number of symbols.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Numerical routine exceeded its work budget.
class DiagnosticsError : public Error {
 public:
  using Error::Error;
};

// Experiment refused because the source fails the moment condition.
class ConditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace preq
