#include "fes/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace fes {

namespace {

bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

std::optional<EpochHours> parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;

  long long v = 0;
  if (parse_int(text, v)) return static_cast<EpochHours>(v);

  if (text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  long long y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d))
    return std::nullopt;
  std::string_view rest = text.substr(10);
  if (!rest.empty()) {
    if (rest.front() != ' ' && rest.front() != 'T') return std::nullopt;
    rest.remove_prefix(1);
    if (rest.size() < 2 || !parse_int(rest.substr(0, 2), hh)) return std::nullopt;
    rest.remove_prefix(2);
    if (!rest.empty()) {
      if (rest.size() < 3 || rest.front() != ':' || !parse_int(rest.substr(1, 2), mm)) return std::nullopt;
      rest.remove_prefix(3);
    }
    if (!rest.empty()) {
      if (rest.size() < 3 || rest.front() != ':' || !parse_int(rest.substr(1, 2), ss)) return std::nullopt;
      rest.remove_prefix(3);
    }
    if (!rest.empty()) return std::nullopt;
  }
  if (hh < 0 || hh > 23 || mm != 0 || ss != 0) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(y)),
                                        std::chrono::month(static_cast<unsigned>(mo)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<EpochHours>(days) * 24 + hh;
}

std::string format_timestamp(EpochHours h) {
  const EpochHours day = (h >= 0 ? h : h - 23) / 24;
  const std::chrono::year_month_day ymd{std::chrono::sys_days(std::chrono::days(day))};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day(h));
  return buf;
}

}  // namespace fes
