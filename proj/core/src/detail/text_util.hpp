#ifndef FLUOROSIL_DETAIL_TEXT_UTIL_HPP
#define FLUOROSIL_DETAIL_TEXT_UTIL_HPP

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "fluorosil/errors.hpp"

namespace fluorosil::detail {

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Parses a double; `where` names the location for the error message.
inline double parse_double(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || t.empty()) {
    throw ValidationError("non-numeric value '" + token + "' at " + where);
  }
  return value;
}

inline long parse_long(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  long value = 0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || t.empty()) {
    throw ValidationError("non-integer value '" + token + "' at " + where);
  }
  return value;
}

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    // Try shorter forms for readability.
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

// Bit-exact text form used by model files.
inline std::string format_double_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double parse_double_hex(const std::string& token, const std::string& where) {
  double value = 0.0;
  if (std::sscanf(token.c_str(), "%la", &value) != 1) {
    throw ValidationError("bad float token '" + token + "' at " + where);
  }
  return value;
}

}  // namespace fluorosil::detail

#endif
