#pragma once

#include <stdexcept>
#include <string>

namespace mlpolar {

/// Malformed or inconsistent input (bad file, out-of-range parameter, shape mismatch).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// The input is well formed but the requested quantity is undefined for it
/// (isotropic cloud, zero-norm axis combination, zero diagonal tie weight).
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
[[noreturn]] void throw_input(const std::string& what);
[[noreturn]] void throw_degenerate(const std::string& what);
}  // namespace detail

}  // namespace mlpolar
