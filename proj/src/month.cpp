#include "commscape/month.hpp"

#include <cstdio>

#include "commscape/errors.hpp"

namespace commscape {

namespace {

// Civil-from-days conversion (proleptic Gregorian), valid far beyond any
// plausible comment timestamp.
void civil_from_days(std::int64_t z, int* year, unsigned* month, unsigned* day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  *year = static_cast<int>(y + (m <= 2));
  *month = m;
  *day = d;
}

// Inverse of civil_from_days for the first day of a month.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

MonthIndex month_index_from_epoch(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  if (epoch_seconds < 0 && epoch_seconds % 86400 != 0) --days;
  int year;
  unsigned month, day;
  civil_from_days(days, &year, &month, &day);
  return static_cast<MonthIndex>(year * 12 + static_cast<int>(month) - 1);
}

std::string month_label(MonthIndex m) {
  const int year = m / 12;
  const int mon = m % 12 + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, mon);
  return buf;
}

std::int64_t month_start_epoch(MonthIndex m) {
  const std::int64_t year = m / 12;
  const unsigned mon = static_cast<unsigned>(m % 12) + 1;
  return days_from_civil(year, mon, 1) * 86400;
}

MonthIndex month_index_from_label(const std::string& label) {
  int year = 0, mon = 0;
  char extra = 0;
  if (std::sscanf(label.c_str(), "%d-%d%c", &year, &mon, &extra) != 2 ||
      label.size() != 7 || mon < 1 || mon > 12) {
    throw ConfigError("bad month label '" + label + "', expected YYYY-MM");
  }
  return static_cast<MonthIndex>(year * 12 + mon - 1);
}

}  // namespace commscape
