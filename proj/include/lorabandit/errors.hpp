#pragma once

#include <stdexcept>
#include <string>

namespace lorabandit {

// Invalid user-supplied configuration (bad flag, bad config file, value out
// of range). The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failure while running a simulation or writing its artifacts (I/O errors,
// internal invariant violations). The CLI maps this to exit code 2.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lorabandit
