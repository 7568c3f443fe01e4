#pragma once

#include <stdexcept>
#include <string>

namespace polatk {

/// Value outside an operation's mathematical domain (negative radiance, DoLP > 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shape problems: mismatched dimensions, odd mosaics, bad channel counts.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration or argument that fails validation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values during optimization or training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system and format problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polatk
