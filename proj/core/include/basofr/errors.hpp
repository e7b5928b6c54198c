#pragma once

#include <stdexcept>
#include <string>

namespace basofr {

// Failure categories surface as distinct CLI exit codes. Precondition
// violations on library calls use std::invalid_argument / std::out_of_range.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace basofr
