#pragma once

#include <cstdio>
#include <string>

#include "cgp/errors.hpp"

namespace cgp {

// A civil date stored as days since 1970-01-01.
struct Date {
  int days = 0;

  friend bool operator==(Date, Date) = default;
  friend auto operator<=>(Date, Date) = default;
  Date operator+(int d) const { return Date{days + d}; }
  int operator-(Date other) const { return days - other.days; }
};

namespace detail {

// Proleptic Gregorian conversions (H. Hinnant's days_from_civil algorithm).
inline int days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

inline void civil_from_days(int z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

}  // namespace detail

inline bool try_parse_date(const std::string& s, Date& out) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int y = std::stoi(s.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
  const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  out.days = detail::days_from_civil(y, m, d);
  int yy;
  unsigned mm, dd;
  detail::civil_from_days(out.days, yy, mm, dd);
  return yy == y && mm == m && dd == d;
}

inline Date parse_date(const std::string& s) {
  Date d;
  if (!try_parse_date(s, d)) throw ParseError("invalid date '" + s + "'");
  return d;
}

inline std::string format_date(Date date) {
  int y;
  unsigned m, d;
  detail::civil_from_days(date.days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

}  // namespace cgp
