#pragma once

#include <stdexcept>
#include <string>

namespace surf {

/// Violated precondition on the mathematical domain of an operation
/// (empty set, dimension mismatch, non-symmetric matrix, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Density value fell below the log floor at a query point.
class UnderflowError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Malformed input file. Carries the 1-based line number when known.
class DataError : public std::runtime_error {
public:
  DataError(const std::string &what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

} // namespace surf
