#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

/// Raised when a caller violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces unusable numbers (NaN, singular data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time integration blew up; carries the index of the failing step.
class IntegrationFailure : public NumericalError {
 public:
  IntegrationFailure(std::size_t step, const std::string& what)
      : NumericalError("integration failed at step " + std::to_string(step) +
                       ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace fraclab
