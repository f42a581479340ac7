#pragma once

#include <stdexcept>

namespace multipfa {

// Input that violates a documented precondition: malformed data, bad
// configuration, out-of-range arguments. The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures (unreadable input, unwritable output). Exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace multipfa
