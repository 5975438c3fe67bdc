#pragma once

#include <stdexcept>
#include <string>

namespace malalab {

/// Bad caller input: dimension mismatch, parameter out of range, malformed config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is not defined for this target (e.g. exact sampling of a non-separable one).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Quadrature refinement could not certify the requested absolute tolerance.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem size exceeds what an exhaustive method can enumerate.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace malalab
