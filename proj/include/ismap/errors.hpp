#pragma once

#include <stdexcept>
#include <string>

namespace ismap {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input: unreadable/malformed files, invalid configuration, mismatched
// geometry. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Rasters do not cover the requested grid.
class ExtentError : public InputError {
 public:
  using InputError::InputError;
};

// Matrix/vector dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Grid index outside the grid.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// A cell has no valid pixels for some feature; the cell is dropped.
class FeatureUndefinedError : public Error {
 public:
  using Error::Error;
};

// A class needed for balancing is empty.
class BalanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ismap
