#pragma once

#include <stdexcept>
#include <string>

namespace hpvpinn {

/// Bad argument to a library call (counts, shapes, coefficients).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Quadrilateral with non-positive Jacobian determinant.
class DegenerateCell : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value or failed iteration inside a numeric kernel.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, long epoch = -1)
      : std::runtime_error(what), epoch_(epoch) {}

  /// Training epoch at which the failure happened, -1 if not inside training.
  long epoch() const noexcept { return epoch_; }

 private:
  long epoch_;
};

/// Inconsistent run or loss configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based line in the config file, -1 when not tied to a file position.
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Requested a metric that needs data the problem does not provide.
class UnsupportedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hpvpinn
