#pragma once

#include <stdexcept>
#include <string>

namespace geodet {

// Root of every error the library throws. The CLI maps IoError to exit code 2
// and every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Input ended before the declared element count was read.
class TruncationError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by training when a loss or gradient stops being finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace geodet
