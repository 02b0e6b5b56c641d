#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace riskstop::detail {

// Shortest text that reparses to the same double.
inline std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// printf("%.17g") without the locale dependence.
inline std::string digits17(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace riskstop::detail
