#pragma once

#include <stdexcept>
#include <string>

namespace openqs {

// Precondition or input validation failure. The CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation could not be completed (singular solve, horizon too short,
// broken invariant). The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace openqs
