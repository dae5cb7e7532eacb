#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "trajsem/errors.hpp"

namespace trajsem {

constexpr int kMinutesPerDay = 24 * 60;

/// Proleptic Gregorian calendar day.
struct CivilDate {
  int year = 1970;
  int month = 1;  // 1-12
  int day = 1;    // 1-31

  friend bool operator==(const CivilDate&, const CivilDate&) = default;
  friend auto operator<=>(const CivilDate& a, const CivilDate& b) {
    if (a.year != b.year) return a.year <=> b.year;
    if (a.month != b.month) return a.month <=> b.month;
    return a.day <=> b.day;
  }
};

/// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
inline std::int64_t days_from_civil(const CivilDate& d) {
  std::int64_t y = d.year;
  y -= d.month <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

inline CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

/// ISO weekday, 1 = Monday ... 7 = Sunday.
inline int weekday_mon1(const CivilDate& d) {
  // 1970-01-01 was a Thursday.
  std::int64_t days = days_from_civil(d);
  return static_cast<int>(((days % 7) + 10) % 7) + 1;
}

inline std::string to_string(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

inline bool is_valid(const CivilDate& d) {
  if (d.month < 1 || d.month > 12 || d.day < 1) return false;
  return civil_from_days(days_from_civil(d)) == d;
}

inline CivilDate parse_civil_date(std::string_view s) {
  CivilDate d;
  int n = 0;
  if (std::sscanf(std::string(s).c_str(), "%d-%d-%d%n", &d.year, &d.month, &d.day, &n) != 3 ||
      static_cast<size_t>(n) != s.size() || !is_valid(d)) {
    throw ParseError("invalid date: " + std::string(s) + " (expected YYYY-MM-DD)");
  }
  return d;
}

/// Wall-clock timestamp at minute precision. `local_minutes` counts civil
/// minutes since 1970-01-01 00:00 in the timestamp's own frame; the UTC
/// offset is retained but never applied. Slotting operates on wall-clock
/// time as recorded, so stays of one user-day are expected to share a zone.
struct LocalTimestamp {
  std::int64_t local_minutes = 0;
  int offset_minutes = 0;
  bool has_offset = false;

  friend bool operator==(const LocalTimestamp&, const LocalTimestamp&) = default;
};

/// Parses `YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]`.
/// Seconds, when present, are floored away; the pipeline works in minutes.
inline LocalTimestamp parse_iso8601_minutes(std::string_view sv) {
  std::string s(sv);
  CivilDate d;
  int hh = 0, mm = 0;
  int n = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &d.year, &d.month, &d.day) != 3 || !is_valid(d)) {
    throw ParseError("invalid timestamp: " + s);
  }
  size_t tpos = s.find_first_of("T ");
  if (tpos == std::string::npos) throw ParseError("invalid timestamp (missing time): " + s);
  std::string rest = s.substr(tpos + 1);
  if (std::sscanf(rest.c_str(), "%d:%d%n", &hh, &mm, &n) != 2) {
    throw ParseError("invalid timestamp (bad time): " + s);
  }
  std::string tail = rest.substr(static_cast<size_t>(n));
  if (!tail.empty() && tail[0] == ':') {  // seconds, floored
    int ss_ = 0;
    if (std::sscanf(tail.c_str(), ":%d%n", &ss_, &n) != 1 || ss_ < 0 || ss_ > 60) {
      throw ParseError("invalid timestamp (bad seconds): " + s);
    }
    tail = tail.substr(static_cast<size_t>(n));
  }
  LocalTimestamp ts;
  if (!tail.empty()) {
    if (tail == "Z" || tail == "z") {
      ts.has_offset = true;
      ts.offset_minutes = 0;
    } else {
      int oh = 0, om = 0;
      char sign = tail[0];
      if ((sign != '+' && sign != '-') ||
          std::sscanf(tail.c_str() + 1, "%d:%d%n", &oh, &om, &n) != 2 ||
          tail.size() != static_cast<size_t>(n) + 1 || oh > 18 || om > 59) {
        throw ParseError("invalid timestamp (bad offset): " + s);
      }
      ts.has_offset = true;
      ts.offset_minutes = (oh * 60 + om) * (sign == '-' ? -1 : 1);
    }
  }
  if (hh < 0 || hh > 24 || mm < 0 || mm > 59 || (hh == 24 && mm != 0)) {
    throw ParseError("invalid timestamp (time out of range): " + s);
  }
  ts.local_minutes = days_from_civil(d) * kMinutesPerDay + hh * 60 + mm;
  return ts;
}

}  // namespace trajsem
