#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace powerlik {

// Locale-independent decimal rendering with 17 significant digits, enough to
// round-trip any double exactly. Used for every numeric CSV cell so output
// files are byte-reproducible.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace powerlik
