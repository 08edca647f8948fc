#pragma once

#include <stdexcept>
#include <string>

namespace acb {

// Thrown when an ensemble operation is invoked in a target mode that does not
// support it.
class ModeError : public std::logic_error {
 public:
  explicit ModeError(const std::string& what) : std::logic_error(what) {}
};

// Thrown when a factorization or update loses positive-definiteness.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace acb
