#pragma once

#include <stdexcept>

namespace sections {

// Input violated an operation's documented precondition.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration document failed schema or static validation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sections
