#pragma once

#include <stdexcept>
#include <string>

namespace fracac {

// Invalid inputs: bad parameters, violated type invariants, malformed config.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
  ConfigError(std::string field, const std::string& msg)
      : std::invalid_argument(field + ": " + msg), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A documented precondition of an operation does not hold for its arguments.
class PreconditionError : public std::logic_error {
 public:
  explicit PreconditionError(const std::string& msg) : std::logic_error(msg) {}
};

// Runtime numerical failure (NaN, failed line search, rank deficiency, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fracac
