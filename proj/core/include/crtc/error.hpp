#pragma once

#include <stdexcept>
#include <string>

namespace crtc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataErrc {
  RowCountMismatch,
  NonBinaryMask,
  AllMissingRow,
  NonNumeric,
  ShapeMismatch,
  BadLabel,
  Io,
  InvalidArgument,
};

// Problems with input data or with arguments describing it.
class DataError : public Error {
 public:
  DataError(DataErrc code, const std::string& what) : Error(what), code_(code) {}
  DataErrc code() const noexcept { return code_; }

 private:
  DataErrc code_;
};

// Non-finite values or shape mismatches inside differentiable computations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crtc
