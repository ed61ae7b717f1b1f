#pragma once

#include <stdexcept>
#include <string>

namespace shiftcp {

// Base of every error raised by the engine. The CLI maps each subclass to an
// exit code (usage 1, data 2, numerical 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept = 0;
};

// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

// Malformed, inconsistent, or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "data"; }
};

// A numerical routine could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numerical"; }
};

}  // namespace shiftcp
