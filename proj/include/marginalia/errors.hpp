#pragma once

#include <stdexcept>
#include <string>

namespace marginalia {

/// Bad or missing input: malformed files, unknown ids, out-of-range values.
/// The CLI maps this family to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal postcondition failed. The CLI maps this to exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace marginalia
