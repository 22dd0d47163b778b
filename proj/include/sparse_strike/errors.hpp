#pragma once

#include <stdexcept>
#include <string>

namespace sparse_strike {

// Base of every error thrown by the library. Callers that only care about
// "something went wrong at runtime" catch this one.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundsError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };
struct LifecycleError : Error { using Error::Error; };

// Raised when an internal guarantee is broken (e.g. a successful attack that
// did not change the action). Never expected in a correct build.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace sparse_strike
