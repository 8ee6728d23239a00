#pragma once

#include <stdexcept>
#include <string>

namespace qaeqec {

/// Register or matrix would exceed the configured size limit.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed argument: bad index, dimension mismatch, parameter out of range.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A density matrix or unitary failed its numerical invariants.
class StateValidityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters describe a probability distribution with negative mass.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A channel probe produced outputs inconsistent with a linear CPTP map.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected before any computation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qaeqec
