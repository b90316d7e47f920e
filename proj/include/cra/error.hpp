#pragma once

#include <stdexcept>
#include <string>

namespace cra {

/// Malformed or inconsistent input: bad files, failed validation, bad flags.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An analysis stage failed on inputs that were themselves well formed.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string located(const std::string& where, const std::string& what) {
  return where.empty() ? what : where + ": " + what;
}

}  // namespace detail

}  // namespace cra
