#include "infoveil/dates.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>

#include "infoveil/error.hpp"

namespace infoveil {

namespace {

using namespace std::chrono;

bool parseInt(std::string_view text, int& out) {
    if (text.empty()) return false;
    for (char c : text) {
        if (c < '0' || c > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// "YYYY-MM" -> whole month, "YYYY-MM-DD" -> that day.
DateRange parseSide(std::string_view text) {
    text = trim(text);
    if (text.size() == 7 && text[4] == '-') {
        int y = 0;
        int m = 0;
        if (!parseInt(text.substr(0, 4), y) || !parseInt(text.substr(5, 2), m) || m < 1 || m > 12) {
            throw Error(ErrorCode::InvalidArgument, "invalid month '" + std::string(text) + "'");
        }
        const year_month ym{year{y}, month{static_cast<unsigned>(m)}};
        return {ym / 1, ym / last};
    }
    const Date d = parseDate(text);
    return {d, d};
}

}  // namespace

Date parseDate(std::string_view text) {
    text = trim(text);
    int y = 0;
    int m = 0;
    int d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parseInt(text.substr(0, 4), y) ||
        !parseInt(text.substr(5, 2), m) || !parseInt(text.substr(8, 2), d)) {
        throw Error(ErrorCode::InvalidArgument, "invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const Date date{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!date.ok()) {
        throw Error(ErrorCode::InvalidArgument, "invalid calendar date '" + std::string(text) + "'");
    }
    return date;
}

std::string formatDate(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

DateRange parseWindow(std::string_view text) {
    text = trim(text);
    const auto sep = text.find_first_of(":/");
    if (sep == std::string_view::npos) return parseSide(text);
    const DateRange lo = parseSide(text.substr(0, sep));
    const DateRange hi = parseSide(text.substr(sep + 1));
    const DateRange out{lo.from, hi.to};
    if (out.empty()) {
        throw Error(ErrorCode::InvalidArgument, "window '" + std::string(text) + "' ends before it starts");
    }
    return out;
}

std::string formatWindow(const DateRange& range) { return formatDate(range.from) + "/" + formatDate(range.to); }

std::int64_t dayNumber(Date d) { return sys_days{d}.time_since_epoch().count(); }

Date fromDayNumber(std::int64_t days) { return Date{sys_days{std::chrono::days{days}}}; }

Date addDays(Date d, std::int64_t days) { return fromDayNumber(dayNumber(d) + days); }

std::int64_t daysBetween(Date from, Date to) { return dayNumber(to) - dayNumber(from); }

std::int64_t weekIndex(Date d) {
    // 1970-01-01 was a Thursday; shift so Sunday starts a week.
    const std::int64_t shifted = dayNumber(d) + 4;
    return shifted >= 0 ? shifted / 7 : -((-shifted + 6) / 7);
}

std::int64_t monthIndex(Date d) {
    return static_cast<std::int64_t>(static_cast<int>(d.year())) * 12 + static_cast<unsigned>(d.month()) - 1;
}

int isoWeekOfYear(Date d) {
    // The ISO week belongs to the year of its Thursday.
    const sys_days sd{d};
    const weekday wd{sd};
    const int iso_wd = wd.iso_encoding();  // Mon=1..Sun=7
    const sys_days thursday = sd + std::chrono::days{4 - iso_wd};
    const year_month_day thursday_ymd{thursday};
    const sys_days jan1{thursday_ymd.year() / January / 1};
    return static_cast<int>((thursday - jan1).count() / 7) + 1;
}

std::string utcTimestampNow() {
    const std::time_t now = system_clock::to_time_t(system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace infoveil
