#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fes {

/// Hours since 1970-01-01 00:00 UTC.
using EpochHours = std::int64_t;

/// Accepts "YYYY-MM-DD HH[:MM[:SS]]", the same with a 'T' separator, an
/// optional trailing 'Z', a bare date, or an integer count of epoch hours.
/// Minutes/seconds must be zero. Returns nullopt on anything else.
std::optional<EpochHours> parse_timestamp(std::string_view text);

/// "YYYY-MM-DD HH:00".
std::string format_timestamp(EpochHours h);

inline int hour_of_day(EpochHours h) { return static_cast<int>(((h % 24) + 24) % 24); }

}  // namespace fes
