#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infoveil/query.hpp"
#include "infoveil/snapshot.hpp"

namespace infoveil::report {

/// Reals are rendered with 12 significant digits everywhere a result leaves
/// the library, so CLI files and API payloads agree byte for byte.
std::string formatNumber(double value);
/// `value` rounded to 12 significant digits (negative zero folds to zero).
double canonicalNumber(double value);

struct Table {
    std::string name;  // file stem used by the CLI, e.g. "pca_loadings"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string toCsv() const;
};

/// A computed result in both export shapes: `data` is the JSON payload the
/// API wraps in its envelope, `tables` the CSV form.
struct Report {
    nlohmann::json data;
    std::vector<Table> tables;
};

Report catalogReport(const Catalog& catalog);

Report trendsReport(const Snapshot& s, std::string_view query_id, std::string_view geo, Granularity granularity,
                    const std::optional<DateRange>& range);

/// The stored window panel, or (with a range) per-state means of the weekly
/// state series inside the range.
StatePanel resolvePanel(const Snapshot& s, const std::optional<DateRange>& range);
Report panelReport(const Snapshot& s, const std::optional<DateRange>& range);

inline constexpr double kDefaultChangeCap = 10000.0;

/// Every national series of `granularity`, in snapshot order.
Report changeReport(const Snapshot& s, const DateRange& from_window, const DateRange& to_window,
                    std::optional<double> cap, Granularity granularity = Granularity::Weekly);

/// Pairwise-complete Pearson on the window panel; incomplete queries are
/// dropped first unless `keep_incomplete`.
Report correlationReport(const Snapshot& s, bool keep_incomplete = false);

struct PcaParams {
    std::size_t k = 2;
    double threshold = 0.2;
    std::size_t n_top = 5;
};

/// PCA on the window panel after dropping incomplete queries, with an
/// interpretation for every retained component.
Report pcaReport(const Snapshot& s, const PcaParams& params);
/// `component` is 1-based.
Report interpretReport(const Snapshot& s, std::size_t k, std::size_t component, double threshold, std::size_t n_top);

Report choroplethReport(const Snapshot& s, std::string_view query_id, const std::optional<DateRange>& range);

struct LeadLagParams {
    std::string query_id;
    std::string indicator;
    std::optional<int> lag;  // single lag, or the range below
    int lag_min = -8;
    int lag_max = 8;
    /// Seasonally adjust the indicator against this baseline first.
    std::optional<DateRange> adjust_baseline;
};

/// The query's national weekly series against an indicator; weekly queries
/// are averaged to months for monthly indicators.
Report leadlagReport(const Snapshot& s, const LeadLagParams& params);

/// Lead time of the query's national series against every snapshot event.
/// Without a granularity the daily series is used when the snapshot has one.
Report leadtimeReport(const Snapshot& s, std::string_view query_id, int threshold,
                      std::optional<Granularity> granularity = std::nullopt);

}  // namespace infoveil::report
