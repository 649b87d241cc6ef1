#pragma once

#include <stdexcept>
#include <string>

namespace latnet {

// Bad user input: malformed files, inconsistent dimensions, out-of-range
// options. The CLI maps this to exit code 1.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular systems, non-convergent fits, degenerate
// statistics. The CLI maps this to exit code 2.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace latnet
