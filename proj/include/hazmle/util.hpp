#pragma once

// Shared small utilities: error types, locale-independent number I/O,
// string helpers.  Everything else in the library builds on these.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hazmle {

// Duplicate observations are rejected by default; see LifetimeSample.
class TieError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text (data files, serialized objects, spec files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-posed computation was requested on degenerate inputs
// (e.g. curvature estimation on a window with too few segments).
class IllPosedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Formats with 17 significant digits so that parse(format(x)) == x exactly,
// independent of the global locale.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Parses a complete token as a double (locale independent).  Accepts
// "inf"/"-inf"/"nan" spellings produced by format_double.
inline bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  if (token == "inf" || token == "+inf") {
    out = kInf;
    return true;
  }
  if (token == "-inf") {
    out = -kInf;
    return true;
  }
  if (token == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  const char* first = token.data();
  const char* last = token.data() + token.size();
  bool neg = false;
  if (*first == '+') {
    ++first;
  } else if (*first == '-') {
    neg = true;
    ++first;
  }
  double mag = 0;
  auto res = std::from_chars(first, last, mag, std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != last) return false;
  out = neg ? -mag : mag;
  return true;
}

// Throwing convenience wrapper around parse_double.
inline double require_double(std::string_view token) {
  double v = 0;
  if (!parse_double(token, v)) {
    throw ParseError("invalid number: '" + std::string(token) + "'");
  }
  return v;
}

inline long long require_int(std::string_view token) {
  long long v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError("invalid integer: '" + std::string(token) + "'");
  }
  return v;
}

// Linear interpolation of order statistics: with h = (n-1)p, the quantile is
// x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]).
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  if (!(p >= 0) || !(p <= 1)) {
    throw std::invalid_argument("quantile level must lie in [0, 1]");
  }
  double h = (static_cast<double>(sorted.size()) - 1) * p;
  auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  // Avoid inf - inf when both interpolation neighbours are infinite.
  if (frac == 0 || sorted[lo] == sorted[lo + 1]) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Strips a '#' comment and trims; returns empty for blank/comment lines.
inline std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('#');
  if (pos != std::string_view::npos) line = line.substr(0, pos);
  return trim(line);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace hazmle
