#pragma once

#include <cstdio>
#include <string>

namespace rflect {

/// 17 significant digits, enough to round-trip `v` exactly through strtod.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace rflect
