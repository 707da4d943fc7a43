// SPDX-License-Identifier: Apache-2.0
#include "cfx/timeutil.hpp"

#include <cstdio>

#include "cfx/error.hpp"

namespace cfx {

using namespace std::chrono;

Timestamp parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string buf(text);
  const int n = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h,
                            &mi, &s, &tail);
  if (n != 6) throw InvalidInput("malformed timestamp '" + buf + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) {
    throw InvalidInput("invalid timestamp '" + buf + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{ts - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

int weekday_index(Timestamp ts) {
  return static_cast<int>(weekday{floor<days>(ts)}.iso_encoding()) - 1;
}

int hour_of_day(Timestamp ts) {
  return static_cast<int>(hh_mm_ss{ts - floor<days>(ts)}.hours().count());
}

int minute_of_hour(Timestamp ts) {
  return static_cast<int>(hh_mm_ss{ts - floor<days>(ts)}.minutes().count());
}

}  // namespace cfx
