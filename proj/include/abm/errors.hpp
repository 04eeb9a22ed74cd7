#pragma once

#include <stdexcept>
#include <string>

namespace abm {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image extents that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Crop boxes and other geometry outside the source bounds.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Empty or otherwise unusable input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The matte leaves no background pixels to compare.
class DegenerateRegionError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A prerequisite artifact (usually a checkpoint) is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace abm
