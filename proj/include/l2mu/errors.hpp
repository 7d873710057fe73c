#pragma once

#include <stdexcept>
#include <string>

namespace l2mu {

// Argument errors use std::invalid_argument. These two cover files.

/// Malformed or inconsistent file content (bad magic, version, shape, ...).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, written or renamed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace l2mu
