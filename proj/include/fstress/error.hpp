#pragma once

#include <stdexcept>
#include <string>

namespace fstress {

// The three families map onto distinct CLI exit codes (2, 3, 4).

/// Bad parameters or configuration supplied by the caller.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be used: unreadable files, malformed cells, gaps.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical step failed: singular block, non-convergence, loss of definiteness.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fstress
