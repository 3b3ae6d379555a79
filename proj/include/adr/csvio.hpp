#pragma once

#include <cstdio>
#include <string>

namespace adr::io {

/// Deterministic shortest-ish decimal rendering used by every CSV writer.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace adr::io
