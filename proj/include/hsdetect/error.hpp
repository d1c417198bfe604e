#pragma once

#include <stdexcept>

namespace hsdetect {

// Malformed input: shapes, files, parameters out of range.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric routine could not produce a trustworthy value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsdetect
