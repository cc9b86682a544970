#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s3fd {

// Caller supplied something outside an operation's domain (bad config, name
// mismatch, unknown layer kind, dangling subset reference).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed text input. Carries the 1-based line where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace s3fd
