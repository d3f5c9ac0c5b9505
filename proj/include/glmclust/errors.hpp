#pragma once

#include <stdexcept>
#include <string>

namespace glmclust {

/// Bad input: malformed files, invalid responses, inconsistent shapes.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The numbers went wrong: aliasing, exhausted degrees of freedom.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidResponse : public InputError {
 public:
  using InputError::InputError;
};

class InvalidMean : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroResidualDf : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientDf : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MissingDispersion : public InputError {
 public:
  using InputError::InputError;
};

class LengthMismatch : public InputError {
 public:
  using InputError::InputError;
};

class EmptyList : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, long line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class EmptyRegion : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateSeries : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glmclust
