#pragma once

#include <stdexcept>
#include <string>

namespace semdup {

// All library failures derive from Error so callers (the CLI in particular)
// can map them onto exit codes without knowing every subtype.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's mathematical or contractual domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested allocation exceeds the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input file parsed but violates its declared layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Iterative numerics (quadrature, continued fractions) failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Regression problem is degenerate (too few points, no spread, rank deficit).
class FitError : public Error {
 public:
  using Error::Error;
};

// Inputs are individually valid but inconsistent with each other
// (unmatched baselines, mismatched measurement sizes, length mismatches).
class MismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace semdup
