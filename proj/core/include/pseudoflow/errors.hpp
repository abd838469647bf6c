#pragma once

#include <stdexcept>
#include <string>

namespace pseudoflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimension mismatches, bad layer wiring, invalid shapes.
struct ShapeError : Error {
  using Error::Error;
};

// NaN/Inf detected where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed on-disk data (bad magic, truncation, missing frames).
struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pseudoflow
