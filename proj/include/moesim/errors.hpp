#pragma once

#include <stdexcept>
#include <string>

namespace moesim {

// Bad or inconsistent scenario input. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Device memory cannot hold even one expert (K < 1). CLI exit code 3.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A self-check on simulator output failed. CLI exit code 4.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace moesim
