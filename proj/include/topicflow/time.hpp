#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace topicflow {

// Seconds since the Unix epoch, always UTC.
using UtcSeconds = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

namespace detail {

// Howard Hinnant's civil-date algorithms; valid over the whole int range.
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), m, d};
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline int month_from_abbrev(std::string_view s) {
  static constexpr std::string_view names[12] = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  for (int i = 0; i < 12; ++i)
    if (s == names[i]) return i + 1;
  return 0;
}

inline bool valid_civil(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int mdays[12] = {31, 28, 31, 30, 31, 30,
                                    31, 31, 30, 31, 30, 31};
  int dmax = mdays[month - 1];
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (month == 2 && leap) dmax = 29;
  return day <= dmax;
}

}  // namespace detail

inline UtcSeconds make_utc(int year, int month, int day, int hour, int minute,
                           int second) {
  return detail::days_from_civil(year, static_cast<unsigned>(month),
                                 static_cast<unsigned>(day)) *
             kSecondsPerDay +
         hour * 3600 + minute * 60 + second;
}

/// Parses the classic Twitter timestamp ("Mon Sep 24 03:35:21 +0000 2012")
/// or ISO-8601 ("2012-09-24T03:35:21Z", offset or space separator allowed).
/// Returns the instant normalized to UTC, or nullopt if neither form fits.
inline std::optional<UtcSeconds> parse_timestamp(std::string_view text) {
  const std::string s(text);

  // Twitter format: Dow Mon DD HH:MM:SS +ZZZZ YYYY
  {
    char dow[8] = {0}, mon[8] = {0}, sign = 0;
    int day = 0, h = 0, mi = 0, sec = 0, off = 0, year = 0;
    if (std::sscanf(s.c_str(), "%3s %3s %d %d:%d:%d %c%4d %d", dow, mon, &day,
                    &h, &mi, &sec, &sign, &off, &year) == 9 &&
        (sign == '+' || sign == '-')) {
      const int month = detail::month_from_abbrev(mon);
      if (month != 0 && detail::valid_civil(year, month, day) && h < 24 &&
          mi < 60 && sec < 61) {
        const int off_s = (off / 100) * 3600 + (off % 100) * 60;
        UtcSeconds t = make_utc(year, month, day, h, mi, sec);
        return t - (sign == '+' ? off_s : -off_s);
      }
    }
  }

  // ISO-8601: YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+HH:MM|+HHMM]
  {
    int year = 0, month = 0, day = 0, h = 0, mi = 0, sec = 0, n = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%2d%n", &year,
                    &month, &day, &h, &mi, &sec, &n) == 6 &&
        n >= 19) {
      if (!detail::valid_civil(year, month, day) || h > 23 || mi > 59 ||
          sec > 60)
        return std::nullopt;
      std::string_view rest = text.substr(static_cast<std::size_t>(n));
      if (!rest.empty() && rest[0] == '.') {
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        rest = rest.substr(i);
      }
      int off_s = 0;
      if (!rest.empty()) {
        if (rest == "Z" || rest == "z") {
          off_s = 0;
        } else if (rest[0] == '+' || rest[0] == '-') {
          int oh = 0, om = 0;
          const std::string r(rest.substr(1));
          if (std::sscanf(r.c_str(), "%2d:%2d", &oh, &om) == 2 ||
              std::sscanf(r.c_str(), "%2d%2d", &oh, &om) == 2 ||
              std::sscanf(r.c_str(), "%2d", &oh) == 1) {
            off_s = oh * 3600 + om * 60;
            if (rest[0] == '-') off_s = -off_s;
          } else {
            return std::nullopt;
          }
        } else {
          return std::nullopt;
        }
      }
      return make_utc(year, month, day, h, mi, sec) - off_s;
    }
  }

  return std::nullopt;
}

inline UtcSeconds floor_utc_midnight(UtcSeconds t) {
  return detail::floor_div(t, kSecondsPerDay) * kSecondsPerDay;
}

/// "YYYY-MM-DD" of the UTC calendar date containing t.
inline std::string utc_date_string(UtcSeconds t) {
  const auto cd = detail::civil_from_days(detail::floor_div(t, kSecondsPerDay));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", cd.year, cd.month, cd.day);
  return buf;
}

inline std::string format_utc(UtcSeconds t) {
  const std::int64_t days = detail::floor_div(t, kSecondsPerDay);
  const auto cd = detail::civil_from_days(days);
  const std::int64_t rem = t - days * kSecondsPerDay;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.year,
                cd.month, cd.day, static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace topicflow
