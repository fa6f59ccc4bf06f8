#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace relbudget {

namespace detail {
// %g formatting for diagnostics; std::to_string drops small magnitudes to 0.
inline std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", v);
  return buffer;
}
}  // namespace detail

/// Convergence failure, invalid radicand, bracket violation: anything that
/// signals the numerics went wrong rather than the inputs.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or insufficient input data (trace files, empty problem sets).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace relbudget
