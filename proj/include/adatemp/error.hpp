#pragma once

#include <stdexcept>
#include <string>

namespace adatemp {

/// Invalid configuration or violated precondition supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a valid result (degenerate weights,
/// singular systems, CFL violations).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adatemp
