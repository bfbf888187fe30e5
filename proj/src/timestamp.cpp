#include "flexgrid/timestamp.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "flexgrid/errors.hpp"

namespace flexgrid {
namespace {

// Proleptic Gregorian day count relative to 1970-01-01 (H. Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

struct Civil {
  long long year;
  unsigned month;
  unsigned day;
};

Civil civil_from_days(long long z) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

unsigned days_in_month(long long y, unsigned m) {
  static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw ParseError("timestamp too short: '" + std::string(text) + "'");
  }
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw ParseError("malformed timestamp: '" + std::string(text) + "'");
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw ParseError("malformed timestamp: '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute,
                         int second) {
  const long long days = days_from_civil(year, month, day);
  return Timestamp{std::chrono::seconds{days * 86400 + hour * 3600 + minute * 60 + second}};
}

Timestamp parse_rfc3339(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+hh:mm|-hh:mm)
  const int year = read_digits(text, 0, 4);
  expect_char(text, 4, "-");
  const int month = read_digits(text, 5, 2);
  expect_char(text, 7, "-");
  const int day = read_digits(text, 8, 2);
  expect_char(text, 10, "Tt ");
  const int hour = read_digits(text, 11, 2);
  expect_char(text, 13, ":");
  const int minute = read_digits(text, 14, 2);
  expect_char(text, 16, ":");
  const int second = read_digits(text, 17, 2);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (text[pos] != '0') {
        throw ParseError("sub-second timestamps are not supported: '" + std::string(text) + "'");
      }
      ++pos;
    }
    if (pos == start) {
      throw ParseError("malformed timestamp: '" + std::string(text) + "'");
    }
  }
  if (month < 1 || month > 12 || day < 1 ||
      static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)) ||
      hour > 23 || minute > 59 || second > 60) {
    throw ParseError("timestamp out of range: '" + std::string(text) + "'");
  }
  long offset_seconds = 0;
  expect_char(text, pos, "Zz+-");
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int off_h = read_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ":");
    const int off_m = read_digits(text, pos + 4, 2);
    if (off_h > 23 || off_m > 59) {
      throw ParseError("timestamp offset out of range: '" + std::string(text) + "'");
    }
    offset_seconds = sign * (off_h * 3600L + off_m * 60L);
    pos += 6;
  }
  if (pos != text.size()) {
    throw ParseError("trailing characters in timestamp: '" + std::string(text) + "'");
  }
  return make_timestamp(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour,
                        minute, second) -
         std::chrono::seconds{offset_seconds};
}

std::string format_rfc3339(Timestamp ts) {
  const long long total = ts.time_since_epoch().count();
  long long days = total / 86400;
  long long rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const Civil c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", c.year, c.month, c.day,
                rem / 3600, (rem / 60) % 60, rem % 60);
  return buf;
}

std::string format_table_slot(Timestamp ts) {
  static constexpr std::array<const char*, 12> kMonths{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                       "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const long long total = ts.time_since_epoch().count();
  long long days = total / 86400;
  long long rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const Civil c = civil_from_days(days);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s %u, %lld, %02lld:%02lld", kMonths[c.month - 1], c.day,
                c.year, rem / 3600, (rem / 60) % 60);
  return buf;
}

long seconds_of_day(Timestamp ts) {
  long long rem = ts.time_since_epoch().count() % 86400;
  if (rem < 0) rem += 86400;
  return static_cast<long>(rem);
}

}  // namespace flexgrid
