#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace gdelt {

// Calendar dates are plain day counts; all arithmetic happens in days.
using Date = std::chrono::sys_days;
using Days = std::chrono::days;

inline std::optional<Date> make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

namespace detail {

inline bool parse_uint(std::string_view s, unsigned& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

}  // namespace detail

// Strict "YYYYMMDD"; anything else (including out-of-range day/month) is rejected.
inline std::optional<Date> date_from_yyyymmdd(std::string_view s) {
  if (s.size() != 8) return std::nullopt;
  unsigned y = 0, m = 0, d = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(4, 2), m) ||
      !detail::parse_uint(s.substr(6, 2), d))
    return std::nullopt;
  return make_date(static_cast<int>(y), m, d);
}

// Strict "YYYY-MM-DD".
inline std::optional<Date> date_from_iso(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  unsigned y = 0, m = 0, d = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m) ||
      !detail::parse_uint(s.substr(8, 2), d))
    return std::nullopt;
  return make_date(static_cast<int>(y), m, d);
}

inline std::string to_iso(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline bool is_weekend(Date d) {
  const std::chrono::weekday wd{d};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

struct YearMonth {
  int year = 0;
  unsigned month = 0;

  auto operator<=>(const YearMonth&) const = default;

  static YearMonth of(Date d) {
    const std::chrono::year_month_day ymd{d};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
  }

  Date first_day() const {
    return Date{std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                            std::chrono::day{1}}};
  }

  std::string str() const {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", year, month);
    return buf;
  }
};

// "YYYY-MM" (used when feature tables are built at month resolution).
inline std::optional<YearMonth> yearmonth_from_iso(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  unsigned y = 0, m = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m))
    return std::nullopt;
  if (m < 1 || m > 12) return std::nullopt;
  return YearMonth{static_cast<int>(y), m};
}

}  // namespace gdelt
