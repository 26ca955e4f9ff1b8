#pragma once

#include <stdexcept>
#include <string>

namespace lamp {

/// Invalid user-supplied parameter. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what),
        field_(std::move(field)),
        reason_(what) {}

  const std::string& field() const noexcept { return field_; }
  /// Message without the field prefix.
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// Arrays whose dimensions do not conform to the operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear system without a unique solution.
class SingularError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// NaN or Inf produced inside a trajectory.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lamp
