#pragma once

#include <stdexcept>
#include <string>

namespace otk {

// Fatal misuse of an interface: mismatched dimensions, out-of-range
// sparsity levels, malformed input files. Maps to CLI exit code 2.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Refusal to start a computation whose combinatorial cost guard is
// exceeded. The message names the bound. Maps to CLI exit code 3.
struct guard_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace otk
