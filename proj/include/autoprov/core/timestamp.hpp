#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace autoprov {

enum class TimeFormat {
  Iso8601,        // 2018-04-10T12:00:00[.fff][Z|+hh:mm]
  SpaceDateTime,  // 2018-04-10 12:00:00[.fff]  (UTC)
  CommonLog,      // [10/Apr/2018:12:00:00 +0000]
  UnixNanos,      // 19 digits
  UnixMillis,     // 13 digits
  UnixSeconds,    // up to 11 digits, optional fraction
};

struct Timestamp {
  std::string raw;
  std::optional<std::int64_t> epoch_micros;

  bool operator==(const Timestamp&) const = default;
};

const std::vector<TimeFormat>& default_time_formats();

// Keeps `raw` verbatim; epoch_micros comes from the first format that parses.
Timestamp parse_timestamp(std::string_view raw,
                          std::span<const TimeFormat> formats = default_time_formats());

void to_json(nlohmann::json& j, const Timestamp& t);
void from_json(const nlohmann::json& j, Timestamp& t);

}  // namespace autoprov
