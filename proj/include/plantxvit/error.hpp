#pragma once

#include <stdexcept>
#include <string>

namespace plantxvit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or parameter shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values, unknown keys, bad command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing files, undecodable images, malformed checkpoints.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (e.g. a NaN loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of the gradient tape.
class GradientError : public Error {
 public:
  using Error::Error;
};

}  // namespace plantxvit
