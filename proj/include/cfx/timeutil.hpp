// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace cfx {

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM:SS` (UTC, no zone suffix). Throws InvalidInput.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// ISO weekday index with Monday = 0.
int weekday_index(Timestamp ts);
/// Hour and minute of day.
int hour_of_day(Timestamp ts);
int minute_of_hour(Timestamp ts);

}  // namespace cfx
