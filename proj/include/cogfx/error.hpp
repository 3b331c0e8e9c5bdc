#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cogfx {

// Base for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, missing credentials, invalid arguments to a builder.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Completion endpoint failure. status is 0 for transport-level errors.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status = 0, std::string body = {})
      : Error(what), status_(status), body_(std::move(body)) {}

  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

// Numerical routine left its domain or failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Analysis requested on a run directory with nothing to analyze.
class EmptyDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace cogfx
