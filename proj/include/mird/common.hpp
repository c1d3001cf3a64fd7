#pragma once

#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mird {

// Runtime failure (bad shapes, malformed files, degenerate inputs).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or usage (unknown keys, bad flag values).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

using Rng = std::mt19937_64;

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace mird
