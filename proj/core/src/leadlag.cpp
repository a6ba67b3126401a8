#include "infoveil/leadlag.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "infoveil/csv.hpp"
#include "infoveil/error.hpp"

namespace infoveil {
namespace embedded {
extern const std::string_view kPolicyEventsCsv;
}

namespace leadlag {

const std::vector<PolicyEvent>& defaultPolicyEvents() {
    static const std::vector<PolicyEvent> events = parsePolicyEvents(embedded::kPolicyEventsCsv);
    return events;
}

std::vector<PolicyEvent> parsePolicyEvents(std::string_view csv_text) {
    const auto rows = csv::parse(csv_text);
    if (rows.empty() || rows.front().fields != std::vector<std::string>{"name", "date"}) {
        throw Error(ErrorCode::SchemaMismatch, "policy event file needs header name,date");
    }
    std::vector<PolicyEvent> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 2) {
            throw Error(ErrorCode::SchemaMismatch, "expected 2 fields", "line " + std::to_string(row.line));
        }
        out.push_back({row.fields[0], parseDate(row.fields[1])});
    }
    return out;
}

std::string writePolicyEventsCsv(const std::vector<PolicyEvent>& events) {
    std::string out = "name,date\n";
    for (const auto& e : events) out += csv::joinRow({e.name, formatDate(e.date)}) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

Normalized normalize0to100(const std::vector<double>& values) {
    if (values.size() < 2) throw Error(ErrorCode::TooShort, "normalisation needs at least two points");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    Normalized out;
    out.values.resize(values.size(), 0.0);
    if (hi == lo) {
        out.constant = true;
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = 100.0 * (values[i] - lo) / (hi - lo);
    return out;
}

TimeSeries normalize0to100(const TimeSeries& series) {
    std::vector<double> v;
    v.reserve(series.points.size());
    for (const auto& p : series.points) v.push_back(p.value);
    const Normalized n = normalize0to100(v);
    TimeSeries out = series;
    for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i].value = n.values[i];
    return out;
}

// ---------------------------------------------------------------------------

namespace {

int seasonIndex(Granularity g, Date d) {
    if (g == Granularity::Monthly) return static_cast<int>(static_cast<unsigned>(d.month()));
    return isoWeekOfYear(d);
}

std::int64_t periodIndex(Granularity g, Date d) {
    switch (g) {
        case Granularity::Daily: return dayNumber(d);
        case Granularity::Weekly: return weekIndex(d);
        case Granularity::Monthly: return monthIndex(d);
        case Granularity::WindowAggregate: break;
    }
    throw Error(ErrorCode::InvalidArgument, "window aggregates have no period index");
}

}  // namespace

TimeSeries seasonalAdjust(const TimeSeries& series, const DateRange& baseline) {
    if (series.granularity == Granularity::WindowAggregate) {
        throw Error(ErrorCode::InvalidArgument, "seasonal adjustment needs a dated series");
    }
    if (baseline.empty() || daysBetween(baseline.from, baseline.to) < 364) {
        throw Error(ErrorCode::InsufficientBaseline, "baseline " + formatWindow(baseline) + " is shorter than a year");
    }

    std::map<int, std::pair<double, std::size_t>> acc;
    for (const auto& p : series.points) {
        if (!baseline.contains(p.date)) continue;
        auto& [sum, n] = acc[seasonIndex(series.granularity, p.date)];
        sum += p.value;
        ++n;
    }
    const std::size_t needed = series.granularity == Granularity::Monthly ? 12 : 52;
    std::size_t covered = 0;
    for (const auto& [idx, a] : acc) covered += idx <= static_cast<int>(needed) ? 1 : 0;
    if (covered < needed) {
        throw Error(ErrorCode::InsufficientBaseline,
                    "baseline covers " + std::to_string(covered) + " of " + std::to_string(needed) + " season indices");
    }

    std::map<int, double> means;
    double grand = 0.0;
    for (const auto& [idx, a] : acc) {
        means[idx] = a.first / static_cast<double>(a.second);
    }
    // Grand mean over the regular indices so offsets sum to zero over a cycle.
    for (int idx = 1; idx <= static_cast<int>(needed); ++idx) grand += means[idx];
    grand /= static_cast<double>(needed);

    TimeSeries out = series;
    for (auto& p : out.points) {
        int idx = seasonIndex(series.granularity, p.date);
        if (!means.count(idx)) idx = static_cast<int>(needed);  // ISO week 53 without a baseline
        p.value -= means[idx] - grand;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Overlap {
    std::vector<double> x;
    std::vector<double> y;
};

Overlap overlap(const TimeSeries& query, const TimeSeries& indicator, int lag) {
    if (query.granularity != indicator.granularity) {
        throw Error(ErrorCode::InvalidArgument, "query is " + std::string(toString(query.granularity)) +
                                                    " but indicator is " + std::string(toString(indicator.granularity)));
    }
    std::map<std::int64_t, double> shifted;
    for (const auto& p : query.points) shifted[periodIndex(query.granularity, p.date) + lag] = p.value;
    Overlap out;
    for (const auto& p : indicator.points) {
        const auto it = shifted.find(periodIndex(indicator.granularity, p.date));
        if (it == shifted.end()) continue;
        out.x.push_back(it->second);
        out.y.push_back(p.value);
    }
    return out;
}

}  // namespace

LagCorrResult laggedCorrelation(const TimeSeries& query, const TimeSeries& indicator, int lag) {
    const Overlap o = overlap(query, indicator, lag);
    const std::size_t n = o.x.size();
    if (n < 3) {
        throw Error(ErrorCode::InsufficientOverlap,
                    "lag " + std::to_string(lag) + " leaves " + std::to_string(n) + " overlapping periods");
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += o.x[i];
        my += o.y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = o.x[i] - mx;
        const double dy = o.y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorCode::ConstantSeries, "series is constant over the overlap at lag " + std::to_string(lag));
    }
    return {lag, std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), n};
}

std::vector<LagCorrResult> lagProfile(const TimeSeries& query, const TimeSeries& indicator, int lag_min, int lag_max) {
    if (lag_min > lag_max) throw Error(ErrorCode::InvalidArgument, "empty lag range");
    std::vector<LagCorrResult> out;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
        try {
            out.push_back(laggedCorrelation(query, indicator, lag));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientOverlap && e.code() != ErrorCode::ConstantSeries) throw;
        }
    }
    return out;
}

LagCorrResult bestLag(const TimeSeries& query, const TimeSeries& indicator, int lag_min, int lag_max,
                      LagObjective objective) {
    const auto profile = lagProfile(query, indicator, lag_min, lag_max);
    if (profile.empty()) {
        throw Error(ErrorCode::NoValidLag,
                    "no lag in [" + std::to_string(lag_min) + ", " + std::to_string(lag_max) + "] is computable");
    }
    const auto value = [&](const LagCorrResult& r) { return objective == LagObjective::Signed ? r.r : std::abs(r.r); };
    // Non-negative lags first, then by magnitude.
    const auto tieRank = [](int lag) { return std::pair{lag < 0 ? 1 : 0, std::abs(lag)}; };
    const LagCorrResult* best = &profile.front();
    for (const auto& cand : profile) {
        const double d = value(cand) - value(*best);
        if (d > 1e-12 || (std::abs(d) <= 1e-12 && tieRank(cand.lag) < tieRank(best->lag))) best = &cand;
    }
    return *best;
}

TimeSeries toMonthly(const TimeSeries& series) {
    if (series.granularity == Granularity::Monthly) return series;
    std::map<std::int64_t, std::pair<double, std::size_t>> acc;
    for (const auto& p : series.points) {
        auto& [sum, n] = acc[monthIndex(p.date)];
        sum += p.value;
        ++n;
    }
    TimeSeries out{Granularity::Monthly, {}};
    for (const auto& [idx, a] : acc) {
        const int y = static_cast<int>(idx >= 0 ? idx / 12 : (idx - 11) / 12);
        const unsigned m = static_cast<unsigned>(idx - static_cast<std::int64_t>(y) * 12) + 1;
        out.points.push_back({Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{1}},
                              a.first / static_cast<double>(a.second)});
    }
    return out;
}

// ---------------------------------------------------------------------------

LeadTime leadTime(const RsvSeries& signal, int threshold, const PolicyEvent& event) {
    if (signal.points.empty()) throw Error(ErrorCode::EmptySeries, "lead time of an empty series", signal.query_id);
    for (const auto& p : signal.points) {
        if (p.value >= threshold) {
            return {static_cast<int>(daysBetween(p.date, event.date)), p.date};
        }
    }
    return {};
}

}  // namespace leadlag
}  // namespace infoveil
