#pragma once

#include <stdexcept>
#include <string>

namespace mmkit {

/// Bad dimensions, non-finite values, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank-deficient Jacobian handed to an undamped pseudoinverse.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration passed to a planner or solver lies outside the joint limits.
class JointLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerically degenerate input: ill-conditioned mass matrix, near-zero duration.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed robot, map, or scenario file. The message names the file and field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmkit
