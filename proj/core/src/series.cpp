#include "infoveil/series.hpp"

#include <algorithm>

#include "infoveil/error.hpp"

namespace infoveil {

std::string_view toString(Granularity g) noexcept {
    switch (g) {
        case Granularity::Daily: return "daily";
        case Granularity::Weekly: return "weekly";
        case Granularity::Monthly: return "monthly";
        case Granularity::WindowAggregate: return "window";
    }
    return "weekly";
}

Granularity parseGranularity(std::string_view text) {
    if (text == "daily") return Granularity::Daily;
    if (text == "weekly") return Granularity::Weekly;
    if (text == "monthly") return Granularity::Monthly;
    if (text == "window") return Granularity::WindowAggregate;
    throw Error(ErrorCode::InvalidArgument, "unknown granularity '" + std::string(text) + "'");
}

TimeSeries toTimeSeries(const RsvSeries& s) {
    TimeSeries out{s.granularity, {}};
    out.points.reserve(s.points.size());
    for (const auto& p : s.points) out.points.push_back({p.date, static_cast<double>(p.value)});
    return out;
}

TimeSeries toTimeSeries(const IndicatorSeries& s) { return {s.granularity, s.points}; }

void validateRsvSeries(const RsvSeries& s, bool require_normalized) {
    const std::string where = s.query_id + "@" + s.geo;
    int max_value = 0;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        if (!p.date.ok()) throw Error(ErrorCode::InvalidArgument, "invalid date in series", where);
        if (p.value < 0 || p.value > 100) {
            throw Error(ErrorCode::InvalidArgument,
                        "RSV " + std::to_string(p.value) + " outside 0-100 on " + formatDate(p.date), where);
        }
        if (i > 0 && !(s.points[i - 1].date < p.date)) {
            throw Error(ErrorCode::InvalidArgument, "series dates not strictly increasing at " + formatDate(p.date),
                        where);
        }
        max_value = std::max(max_value, p.value);
    }
    if (require_normalized && max_value != 0 && max_value != 100) {
        throw Error(ErrorCode::InvalidArgument, "normalised series peaks at " + std::to_string(max_value), where);
    }
}

void validateIndicatorSeries(const IndicatorSeries& s) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        if (!(p.value >= 0.0)) {
            throw Error(ErrorCode::NegativeValue, "negative indicator value on " + formatDate(p.date), s.name);
        }
        if (i > 0 && !(s.points[i - 1].date < p.date)) {
            throw Error(ErrorCode::NonMonotonicDates, "indicator dates not strictly increasing at " + formatDate(p.date),
                        s.name);
        }
    }
}

StatePanel::StatePanel(std::vector<std::string> states, std::vector<std::string> query_ids, DateRange window)
    : states_(std::move(states)), query_ids_(std::move(query_ids)), window_(window) {
    values_.assign(states_.size() * query_ids_.size(), std::nullopt);
}

void StatePanel::set(std::size_t state, std::size_t query, std::optional<double> value) {
    if (state >= states_.size() || query >= query_ids_.size()) {
        throw Error(ErrorCode::InvalidArgument, "panel cell out of bounds");
    }
    if (value && !(*value >= 0.0 && *value <= 100.0)) {
        throw Error(ErrorCode::InvalidArgument, "panel value outside 0-100", states_[state] + "/" + query_ids_[query]);
    }
    values_[state * query_ids_.size() + query] = value;
}

std::optional<std::size_t> StatePanel::stateIndex(std::string_view geo) const {
    const auto it = std::find(states_.begin(), states_.end(), geo);
    if (it == states_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

std::optional<std::size_t> StatePanel::queryIndex(std::string_view id) const {
    const auto it = std::find(query_ids_.begin(), query_ids_.end(), id);
    if (it == query_ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - query_ids_.begin());
}

std::vector<std::optional<double>> StatePanel::column(std::size_t query) const {
    std::vector<std::optional<double>> out;
    out.reserve(states_.size());
    for (std::size_t s = 0; s < states_.size(); ++s) out.push_back(at(s, query));
    return out;
}

bool StatePanel::hasMissing() const {
    return std::any_of(values_.begin(), values_.end(), [](const auto& v) { return !v.has_value(); });
}

}  // namespace infoveil
