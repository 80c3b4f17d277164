#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace mhf::data {

/// Hourly instant, counted in whole hours since 1970-01-01T00:00 (UTC-naive).
using HourStamp = std::int64_t;

inline std::chrono::sys_days to_days(HourStamp stamp) {
  auto days = stamp >= 0 ? stamp / 24 : (stamp - 23) / 24;
  return std::chrono::sys_days{std::chrono::days{days}};
}

inline int hour_of_day(HourStamp stamp) {
  auto h = stamp % 24;
  return static_cast<int>(h < 0 ? h + 24 : h);
}

inline HourStamp make_stamp(std::chrono::year_month_day date, int hour) {
  return static_cast<HourStamp>(std::chrono::sys_days{date}.time_since_epoch().count()) * 24 + hour;
}

inline int day_of_year(HourStamp stamp) {
  using namespace std::chrono;
  const year_month_day ymd{to_days(stamp)};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((to_days(stamp) - jan1).count()) + 1;
}

/// Parses `YYYY-MM-DD`.
inline std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto ok = [](auto res) { return res.ec == std::errc{}; };
  if (!ok(std::from_chars(text.data(), text.data() + 4, y)) ||
      !ok(std::from_chars(text.data() + 5, text.data() + 7, m)) ||
      !ok(std::from_chars(text.data() + 8, text.data() + 10, d))) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

/// Accepts `H`, `HH` or `HH:MM` (minutes must be zero).
inline std::optional<int> parse_hour(std::string_view text) {
  std::string_view hour_part = text;
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    hour_part = text.substr(0, colon);
    auto minutes = text.substr(colon + 1);
    if (minutes.find_first_not_of('0') != std::string_view::npos) return std::nullopt;
  }
  int hour = -1;
  auto res = std::from_chars(hour_part.data(), hour_part.data() + hour_part.size(), hour);
  if (res.ec != std::errc{} || res.ptr != hour_part.data() + hour_part.size()) return std::nullopt;
  if (hour < 0 || hour > 23) return std::nullopt;
  return hour;
}

inline std::string format_date(std::chrono::year_month_day ymd) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_date(HourStamp stamp) {
  return format_date(std::chrono::year_month_day{to_days(stamp)});
}

}  // namespace mhf::data
