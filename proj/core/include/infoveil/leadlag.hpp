#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoveil/series.hpp"

namespace infoveil::leadlag {

struct PolicyEvent {
    std::string name;
    Date date;

    bool operator==(const PolicyEvent&) const = default;
};

/// The four 2020 federal NPI anchors.
const std::vector<PolicyEvent>& defaultPolicyEvents();
/// CSV `name,date`.
std::vector<PolicyEvent> parsePolicyEvents(std::string_view csv_text);
std::string writePolicyEventsCsv(const std::vector<PolicyEvent>& events);

struct Normalized {
    std::vector<double> values;
    bool constant = false;
};

/// Min-max map onto [0, 100]; a constant series maps to zeros with the
/// constant flag set. Throws TooShort below two points.
Normalized normalize0to100(const std::vector<double>& values);
TimeSeries normalize0to100(const TimeSeries& series);

/// Classical additive adjustment. The season index is the ISO week (weekly
/// and daily input; week 53 shares week 52's offset when the baseline has
/// none) or the calendar month. Each point is shifted by
/// -(baseline mean at its index - mean of the baseline index means).
/// Throws InsufficientBaseline when the baseline spans less than a year or
/// lacks a season index the series needs.
TimeSeries seasonalAdjust(const TimeSeries& series, const DateRange& baseline);

struct LagCorrResult {
    int lag = 0;  // positive: query leads indicator
    double r = 0.0;
    std::size_t n = 0;

    bool operator==(const LagCorrResult&) const = default;
};

/// Pearson r between query(t - lag) and indicator(t), matched on period
/// index (Sunday weeks, calendar months, days). Throws InsufficientOverlap
/// below three matched periods, ConstantSeries when either side is flat,
/// InvalidArgument on granularity mismatch.
LagCorrResult laggedCorrelation(const TimeSeries& query, const TimeSeries& indicator, int lag);

enum class LagObjective { Signed, Absolute };

/// Maximises r (or |r|) over [lag_min, lag_max]; ties within 1e-12 go to
/// the smallest non-negative lag, then the smallest |lag|. Lags that fail
/// the correlation preconditions are skipped. Throws NoValidLag.
LagCorrResult bestLag(const TimeSeries& query, const TimeSeries& indicator, int lag_min, int lag_max,
                      LagObjective objective = LagObjective::Signed);

/// Every valid lag in [lag_min, lag_max], ascending.
std::vector<LagCorrResult> lagProfile(const TimeSeries& query, const TimeSeries& indicator, int lag_min,
                                      int lag_max);

/// Averages a finer series into calendar months.
TimeSeries toMonthly(const TimeSeries& series);

inline constexpr int kDefaultLeadThreshold = 50;

struct LeadTime {
    /// Days from the first crossing to the event; nullopt means the series
    /// never reached the threshold.
    std::optional<int> days;
    std::optional<Date> crossing;
};

/// Throws EmptySeries.
LeadTime leadTime(const RsvSeries& signal, int threshold, const PolicyEvent& event);

}  // namespace infoveil::leadlag
