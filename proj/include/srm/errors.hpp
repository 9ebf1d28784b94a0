#pragma once

#include <stdexcept>
#include <string>

namespace srm {

// Base of every error raised by the library. Callers that only care about
// "something went wrong in srm" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter or argument outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data (files, columns, prices).
class InputError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure did not deliver a result at the requested accuracy.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnsupportedQuantileError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class OracleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InversionError : public NumericalError {
 public:
  InversionError(const std::string& what, double lo, double hi)
      : NumericalError(what), lo_(lo), hi_(hi) {}

  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace srm
