#pragma once

#include <stdexcept>
#include <string>

namespace pog {

/// Domain error: valid request that cannot be satisfied (CLI exit code 1).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Usage/configuration error: malformed input files or options (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pog
