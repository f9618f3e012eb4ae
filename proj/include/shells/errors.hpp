#pragma once

#include <stdexcept>
#include <string>

namespace shells {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input: malformed files, contract violations,
/// mismatched sizes. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed on valid input. The CLI maps these to
/// exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};
class EmptyMesh : public InputError {
 public:
  using InputError::InputError;
};
class NonTriangleFace : public InputError {
 public:
  using InputError::InputError;
};
class IndexOutOfRange : public InputError {
 public:
  using InputError::InputError;
};
class KTooLarge : public InputError {
 public:
  using InputError::InputError;
};
class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};
class NonFiniteValue : public InputError {
 public:
  using InputError::InputError;
};
class InvalidRange : public InputError {
 public:
  using InputError::InputError;
};
class TemplateMismatch : public InputError {
 public:
  using InputError::InputError;
};
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateGeometry : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class SolverFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class DegenerateSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class NonFiniteEnergy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class AllSurrogatesFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace shells
