#pragma once

#include <stdexcept>
#include <string>

namespace rflect {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A physical or numerical precondition was violated (negative bandwidth,
// voltage outside a calibrated curve, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration; `key_path()` points at the offending JSON key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : Error(key_path.empty() ? message : key_path + ": " + message),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

// Malformed input data file. `line()` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rflect
