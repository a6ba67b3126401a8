#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoveil/dates.hpp"

namespace infoveil {

enum class Granularity { Daily, Weekly, Monthly, WindowAggregate };

std::string_view toString(Granularity g) noexcept;
/// Accepts "daily", "weekly", "monthly", "window".
Granularity parseGranularity(std::string_view text);

struct RsvPoint {
    Date date;
    int value = 0;

    bool operator==(const RsvPoint&) const = default;
};

/// A dated sequence of 0-100 integer RSVs for one (query, geography, granularity).
struct RsvSeries {
    std::string query_id;
    std::string geo;
    Granularity granularity = Granularity::Weekly;
    std::vector<RsvPoint> points;
    /// When the series was pulled from its source; empty for synthetic data.
    std::string pulled_at;

    bool operator==(const RsvSeries&) const = default;
};

struct TimePoint {
    Date date;
    double value = 0.0;

    bool operator==(const TimePoint&) const = default;
};

/// External real-world series in native units (claims, applications).
struct IndicatorSeries {
    std::string name;
    Granularity granularity = Granularity::Weekly;
    std::vector<TimePoint> points;

    bool operator==(const IndicatorSeries&) const = default;
};

/// Real-valued view used by the lead-lag machinery.
struct TimeSeries {
    Granularity granularity = Granularity::Weekly;
    std::vector<TimePoint> points;
};

TimeSeries toTimeSeries(const RsvSeries& s);
TimeSeries toTimeSeries(const IndicatorSeries& s);

/// Throws Error(InvalidArgument) when dates are not strictly increasing or a
/// value falls outside 0-100. With `require_normalized`, also checks that the
/// maximum is 100 unless every value is 0.
void validateRsvSeries(const RsvSeries& s, bool require_normalized = false);
void validateIndicatorSeries(const IndicatorSeries& s);

/// Geography x query matrix over one window with an explicit missing mask.
class StatePanel {
public:
    StatePanel() = default;
    StatePanel(std::vector<std::string> states, std::vector<std::string> query_ids, DateRange window);

    const std::vector<std::string>& states() const { return states_; }
    const std::vector<std::string>& queryIds() const { return query_ids_; }
    const DateRange& window() const { return window_; }
    std::size_t stateCount() const { return states_.size(); }
    std::size_t queryCount() const { return query_ids_.size(); }

    const std::optional<double>& at(std::size_t state, std::size_t query) const {
        return values_[state * query_ids_.size() + query];
    }
    void set(std::size_t state, std::size_t query, std::optional<double> value);

    std::optional<std::size_t> stateIndex(std::string_view geo) const;
    std::optional<std::size_t> queryIndex(std::string_view id) const;

    std::vector<std::optional<double>> column(std::size_t query) const;
    bool hasMissing() const;

    bool operator==(const StatePanel&) const = default;

private:
    std::vector<std::string> states_;
    std::vector<std::string> query_ids_;
    DateRange window_{};
    std::vector<std::optional<double>> values_;
};

}  // namespace infoveil
