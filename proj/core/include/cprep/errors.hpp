#pragma once

#include <stdexcept>
#include <string>

namespace cprep {

/// Error raised while reading a textual machine description.
/// Carries the 1-based line number the problem was detected on.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Raised when an iterative solver fails to reach its tolerance within the
/// iteration budget.  Carries the last observed residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : std::runtime_error(message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace cprep
