#pragma once

#include <stdexcept>
#include <string>

namespace sgvar {

// Exit-code contract used by the CLI: 1 failed checks / non-convergence,
// 2 invalid configuration, 3 resource cap.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Expression evaluated outside its domain (log of non-positive, x/0, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax / unknown-identifier error with a byte offset into the source text.
class ExprParseError : public ConfigError {
 public:
  ExprParseError(const std::string& msg, std::size_t offset)
      : ConfigError(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_ = 0;
};

// Iterative numerics that failed to converge where a result is mandatory.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgvar
