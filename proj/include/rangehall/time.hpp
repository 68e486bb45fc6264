#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "rangehall/error.hpp"

namespace rangehall {

using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;

inline Timestamp timestamp_from_ms(std::int64_t ms) { return Timestamp{Millis{ms}}; }
inline std::int64_t to_ms(Timestamp t) { return t.time_since_epoch().count(); }

inline double to_seconds(Millis d) { return static_cast<double>(d.count()) / 1000.0; }
inline double to_minutes(Millis d) { return static_cast<double>(d.count()) / 60000.0; }
inline double to_hours(Millis d) { return static_cast<double>(d.count()) / 3600000.0; }

/// RFC 3339 UTC with millisecond precision, e.g. 2026-01-05T09:00:00.000Z.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<Millis> tod{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()), static_cast<int>(tod.subseconds().count()));
  return buf;
}

/// Accepts YYYY-MM-DDTHH:MM:SS[.fff]Z. Fractions beyond milliseconds are truncated.
inline Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&]() -> Timestamp {
    throw Error(ErrorCode::InvalidArgument, "malformed timestamp '" + std::string(text) + "'");
  };
  auto digits = [&](std::size_t pos, std::size_t n, int& out) {
    if (pos + n > text.size()) return false;
    out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (text[i] < '0' || text[i] > '9') return false;
      out = out * 10 + (text[i] - '0');
    }
    return true;
  };
  int y, mo, d, h, mi, s;
  if (text.size() < 20 || !digits(0, 4, y) || text[4] != '-' || !digits(5, 2, mo) || text[7] != '-' ||
      !digits(8, 2, d) || text[10] != 'T' || !digits(11, 2, h) || text[13] != ':' || !digits(14, 2, mi) ||
      text[16] != ':' || !digits(17, 2, s))
    return fail();
  std::size_t pos = 19;
  int ms = 0;
  if (text[pos] == '.') {
    ++pos;
    int scale = 100;
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ms += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) return fail();
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') return fail();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return fail();
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + Millis{ms};
}

}  // namespace rangehall
