#pragma once

#include <stdexcept>
#include <string>

namespace infharm {

/// Bad arguments, malformed map specs and configuration problems.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical step failed on otherwise valid input (quadrature, singular jet).
class ComputeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace infharm
