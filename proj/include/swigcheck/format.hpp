#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace swigcheck {

/// Shortest round-trip decimal form of a double ("0.5", "1.5714285714285714").
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) v = 0;  // drop the sign of -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace swigcheck
