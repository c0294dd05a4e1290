#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wkw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed us something the contract rejects (empty name, bad range).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A graph invariant would be broken, e.g. a relation with a dangling endpoint.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  // 1-based; 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ExtractorUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace wkw
