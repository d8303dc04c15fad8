#pragma once

#include <stdexcept>

namespace qexplore {

/// A caller violated an operation's precondition (unknown vertex, shape
/// mismatch, empty batch, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file or record could not be parsed or is inconsistent with what the
/// reader expects.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qexplore
