#pragma once

#include <stdexcept>
#include <string>

namespace palmnut {

/// Operand sizes do not agree with an operator or with each other.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN/Inf, or an iterative method failed to converge.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown by power iteration when the iteration budget runs out; carries the
/// last Rayleigh-quotient estimate so callers can still use it.
class ConvergenceError : public NumericError {
public:
  ConvergenceError(const std::string &what, double last_estimate)
      : NumericError(what), last_estimate_(last_estimate) {}

  double last_estimate() const noexcept { return last_estimate_; }

private:
  double last_estimate_;
};

/// Invalid user-supplied configuration (bad flags, inconsistent parameters).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

} // namespace detail
} // namespace palmnut
