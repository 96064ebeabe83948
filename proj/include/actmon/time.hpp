#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace actmon {

// All times are integer microseconds internally. Inputs are written in
// milliseconds and may carry up to three decimal places; anything finer
// does not fit the tick grid and is rejected.
using Us = std::int64_t;

inline constexpr Us kUsPerMs = 1000;

inline Us us_from_ms(double ms) {
  if (!std::isfinite(ms)) throw std::invalid_argument("time is not finite");
  double us = ms * 1000.0;
  double rounded = std::nearbyint(us);
  if (std::fabs(us - rounded) > 1e-6)
    throw std::invalid_argument("time has more than 3 decimal places of ms: " +
                                std::to_string(ms));
  return static_cast<Us>(std::llround(us));
}

// Strict text form: optional sign, digits, optional '.' and up to 3 decimals.
inline Us us_from_ms_string(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::size_t digits_begin = i;
  Us whole = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    whole = whole * 10 + (text[i] - '0');
    ++i;
  }
  if (i == digits_begin) throw std::invalid_argument("bad time literal: " + text);
  Us frac_us = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    int frac_digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (++frac_digits > 3)
        throw std::invalid_argument("more than 3 decimal places of ms: " + text);
      frac_us = frac_us * 10 + (text[i] - '0');
      ++i;
    }
    for (; frac_digits < 3; ++frac_digits) frac_us *= 10;
  }
  if (i != text.size()) throw std::invalid_argument("bad time literal: " + text);
  Us total = whole * kUsPerMs + frac_us;
  return negative ? -total : total;
}

inline double ms_from_us(Us us) { return static_cast<double>(us) / 1000.0; }

// Canonical ms rendering for tables: trims trailing zeros, keeps µs precision.
inline std::string ms_string(Us us) {
  char buf[48];
  Us whole = us / kUsPerMs;
  Us frac = us % kUsPerMs;
  if (frac < 0) {
    frac = -frac;
    if (whole == 0) {
      std::snprintf(buf, sizeof buf, "-0");
      whole = 0;
    }
  }
  if (frac == 0) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(whole));
  } else {
    char fracbuf[8];
    std::snprintf(fracbuf, sizeof fracbuf, "%03lld", static_cast<long long>(frac));
    std::string f(fracbuf);
    while (!f.empty() && f.back() == '0') f.pop_back();
    std::snprintf(buf, sizeof buf, "%s%lld.%s", us < 0 && whole == 0 ? "-" : "",
                  static_cast<long long>(whole), f.c_str());
  }
  return std::string(buf);
}

inline Us lcm_us(Us a, Us b) {
  if (a == 0 || b == 0) return 0;
  Us x = a, y = b;
  while (y != 0) {
    Us t = x % y;
    x = y;
    y = t;
  }
  return a / x * b;
}

}  // namespace actmon
