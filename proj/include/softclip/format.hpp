#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace softclip {

/// 17 significant digits, so every double round-trips through text.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

}  // namespace softclip
