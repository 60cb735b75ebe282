#pragma once

#include <stdexcept>
#include <string>

namespace cral {

/// A point or pixel lies outside the valid domain of a projection
/// (behind the camera plane, at or above the horizon).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A configuration value violates its module's invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file could not be parsed. The message names the file and, where
/// meaningful, the line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cral
