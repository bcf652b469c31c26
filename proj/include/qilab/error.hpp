#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace qilab {

/// Input failed validation (bad field, window violation, unnormalized state).
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical guard fired: truncation window too narrow, unresolved
/// oscillation, Bessel order cap exceeded.
class NumericalGuardError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant was violated after computation.
class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Short form of a number for error messages.
inline std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

} // namespace qilab
