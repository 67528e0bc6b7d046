#pragma once

#include <stdexcept>

namespace ovgs {

// Bad or inconsistent caller input (malformed files, invalid parameters).
// Everything else that escapes the library is an internal error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ovgs
