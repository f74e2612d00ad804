#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frparse {

// Caller broke a documented precondition (shape mismatch, illegal action,
// empty corpus, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed treebank input. Carries the 1-based line number of the offending
// row.
class ConllError : public std::runtime_error {
 public:
  ConllError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Missing, truncated or otherwise unreadable model file.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace frparse
