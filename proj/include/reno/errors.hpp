// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace reno {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not conform for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or model/loss configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sequence too short for the convolution stack.
class InputTooShortError : public Error {
 public:
  using Error::Error;
};

/// Class id outside [0, C).
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed gradient checks.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Data-side errors. All of them map to the "data error" exit code.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace reno
