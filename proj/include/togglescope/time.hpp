#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "togglescope/error.hpp"

namespace togglescope {

// All instants are UTC with second precision.
using Instant = std::chrono::sys_seconds;

inline constexpr double kSecondsPerDay = 86400.0;

inline Instant from_unix_seconds(long long secs) {
  return Instant{std::chrono::seconds{secs}};
}

inline long long to_unix_seconds(Instant t) {
  return t.time_since_epoch().count();
}

// Signed span b - a in (fractional) days.
inline double days_between(Instant a, Instant b) {
  return static_cast<double>((b - a).count()) / kSecondsPerDay;
}

inline std::chrono::sys_days utc_day(Instant t) {
  return std::chrono::floor<std::chrono::days>(t);
}

inline std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_month(std::chrono::year_month ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ym.year()),
                static_cast<unsigned>(ym.month()));
  return buf;
}

// 2020-01-31T12:00:00Z
inline std::string format_iso8601(Instant t) {
  const auto day = utc_day(t);
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(day).c_str(),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" followed by "Z", "+hh:mm",
// "-hh:mm" or nothing (taken as UTC). A space may replace the 'T'.
inline std::optional<Instant> try_parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
  if (!detail::read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
      !detail::read_int(s, 5, 2, mo) || !detail::read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    if (s.size() < 19 || s[13] != ':' || s[16] != ':' || !detail::read_int(s, 11, 2, hh) ||
        !detail::read_int(s, 14, 2, mi) || !detail::read_int(s, 17, 2, ss)) {
      return std::nullopt;
    }
    if (hh > 23 || mi > 59 || ss > 60) return std::nullopt;
    pos = 19;
  }
  long long offset = 0;
  if (pos < s.size()) {
    const char c = s[pos];
    if (c == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((c == '+' || c == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!detail::read_int(s, pos + 1, 2, oh) || !detail::read_int(s, pos + 4, 2, om)) {
        return std::nullopt;
      }
      offset = (oh * 3600LL + om * 60LL) * (c == '+' ? 1 : -1);
    } else {
      return std::nullopt;
    }
  }
  const auto base = sys_days{ymd} + hours{hh} + minutes{mi} + seconds{ss};
  return Instant{base - seconds{offset}};
}

inline Instant parse_iso8601(std::string_view s) {
  if (auto t = try_parse_iso8601(s)) return *t;
  throw ConfigError("invalid ISO-8601 instant: '" + std::string(s) + "'");
}

}  // namespace togglescope
