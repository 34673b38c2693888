#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aoi {

// Invalid configuration or mismatched dimensions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// AMP produced a non-finite value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Iterative method did not reach its tolerance within the cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double last_difference, const std::string& what)
      : std::runtime_error(what), last_difference_(last_difference) {}
  double last_difference() const noexcept { return last_difference_; }

 private:
  double last_difference_;
};

// Truncated series still carries more mass than requested.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(double tail_mass, const std::string& what)
      : std::runtime_error(what), tail_mass_(tail_mass) {}
  double tail_mass() const noexcept { return tail_mass_; }

 private:
  double tail_mass_;
};

}  // namespace aoi
