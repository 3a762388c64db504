#pragma once

#include <stdexcept>
#include <string>

namespace wesper {

/// Thrown when an iterative solve fails to reach its residual contract.
/// Carries the best residual seen so callers can report how close it got.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

/// Thrown when a branch inverse is queried outside the branch's range.
class NoSolutionError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace wesper
