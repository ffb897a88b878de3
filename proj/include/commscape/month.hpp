#pragma once

#include <cstdint>
#include <string>

namespace commscape {

// Calendar month in UTC, encoded as year*12 + (month-1) so adjacent months
// always differ by exactly 1. All bucketing is done in UTC.
using MonthIndex = std::int32_t;

MonthIndex month_index_from_epoch(std::int64_t epoch_seconds);

// "YYYY-MM"
std::string month_label(MonthIndex m);

// Parses "YYYY-MM"; throws ConfigError on malformed input.
MonthIndex month_index_from_label(const std::string& label);

// First second of the month, UTC.
std::int64_t month_start_epoch(MonthIndex m);

}  // namespace commscape
