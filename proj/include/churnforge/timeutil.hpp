#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace churnforge {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Parses `YYYY-MM-DDTHH:MM:SS` followed by `Z` or a `+HH:MM`/`-HH:MM` offset.
/// A bare date (`YYYY-MM-DD`) is read as midnight UTC. Throws std::invalid_argument.
Timestamp parse_iso8601(std::string_view text);

/// Always emits `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp t);

Timestamp now_utc();

}  // namespace churnforge
