#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace flexgrid {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds kSlotLength{600};

/// Parses an RFC 3339 date-time ("2021-11-28T18:00:00Z", optional fractional
/// seconds, "+hh:mm" offsets) into UTC seconds. Throws ParseError.
Timestamp parse_rfc3339(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp ts);

/// Formats as "Nov 28, 2021, 18:00" for report tables.
std::string format_table_slot(Timestamp ts);

/// Seconds elapsed since UTC midnight.
long seconds_of_day(Timestamp ts);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0);

}  // namespace flexgrid
