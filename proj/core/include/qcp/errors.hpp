#pragma once

#include <stdexcept>
#include <string>

namespace qcp {

// Eigenvalue problem has no unique ground state (gap below the degeneracy epsilon).
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step-size underflow, step budget exhausted, or norm drift beyond the allowed bound.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input evaluated at a singular point of a closed-form expression.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid experiment or engine configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qcp
