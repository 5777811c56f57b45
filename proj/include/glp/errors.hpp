#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace glp {

// Precondition violated by caller-supplied values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A bootstrap or validation run lost too many replicates.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system had a zero pivot.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the lattice simulator when a particle outlives max_steps.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(std::uint64_t steps, const std::string& what)
      : std::runtime_error(what), steps_(steps) {}
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  std::uint64_t steps_;
};

}  // namespace glp
