#pragma once

#include <stdexcept>
#include <string>

namespace privkt {

// Invalid hyperparameters, shapes, or config keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API called out of order (e.g. backward without a recorded tape).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad input values, such as out-of-range labels.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files (IDX, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical routines that fail to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace privkt
