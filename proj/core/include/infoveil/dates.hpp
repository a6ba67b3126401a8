#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace infoveil {

using Date = std::chrono::year_month_day;

/// Inclusive calendar range.
struct DateRange {
    Date from;
    Date to;

    bool contains(Date d) const { return from <= d && d <= to; }
    bool empty() const { return to < from; }
    bool operator==(const DateRange&) const = default;
};

/// Parses "YYYY-MM-DD". Throws Error(InvalidArgument).
Date parseDate(std::string_view text);
std::string formatDate(Date d);

/// Parses a window spec: "YYYY-MM" (whole month), "YYYY-MM-DD" (single day),
/// or "FROM:TO" / "FROM/TO" where each side is a date or a month.
DateRange parseWindow(std::string_view text);
std::string formatWindow(const DateRange& range);

std::int64_t dayNumber(Date d);
Date fromDayNumber(std::int64_t days);
Date addDays(Date d, std::int64_t days);
std::int64_t daysBetween(Date from, Date to);

/// Index of the Sunday-to-Saturday week containing `d`. Trends weekly
/// buckets start on Sunday and DOL claim weeks end on Saturday, so both land
/// on the same index.
std::int64_t weekIndex(Date d);
std::int64_t monthIndex(Date d);

/// ISO-8601 week-of-year, 1..53.
int isoWeekOfYear(Date d);

/// UTC timestamp "YYYY-MM-DDTHH:MM:SSZ".
std::string utcTimestampNow();

}  // namespace infoveil
