#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "error.hpp"

namespace cra {

/// Shortest round-trip decimal form; identical bits give identical text.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw InputError(where + ": not a number: '" + std::string(text) + "'");
  return v;
}

}  // namespace cra
