#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "infoveil/query.hpp"
#include "infoveil/snapshot.hpp"

namespace infoveil::alerts {

/// Fires when the mean of the last `window_weeks` points exceeds the mean of
/// the `window_weeks` before them by at least `threshold_percent`.
struct PercentChangeOver {
    int window_weeks = 4;
    double threshold_percent = 100.0;

    bool operator==(const PercentChangeOver&) const = default;
};

/// Fires at the first point with value >= rsv_value.
struct ThresholdCross {
    int rsv_value = 50;

    bool operator==(const ThresholdCross&) const = default;
};

using AlertRule = std::variant<PercentChangeOver, ThresholdCross>;

struct WatchEntry {
    std::string query_id;
    std::string geo = "US";
    Granularity granularity = Granularity::Weekly;
    AlertRule rule;

    bool operator==(const WatchEntry&) const = default;
};

struct Watchlist {
    std::vector<WatchEntry> entries;
    std::uint64_t version = 0;

    bool operator==(const Watchlist&) const = default;
};

struct Alert {
    std::string query_id;
    std::string geo;
    AlertRule rule;
    Date trigger_date;
    double observed = 0.0;
    std::string snapshot_hash;

    bool operator==(const Alert&) const = default;
};

std::string describe(const AlertRule& rule);

nlohmann::json toJson(const Watchlist& w);
nlohmann::json toJson(const Alert& a);
/// Throws InvalidArgument on a malformed document.
std::vector<WatchEntry> entriesFromJson(const nlohmann::json& entries);

/// Deterministic in (snapshot, watchlist). Entries whose series is missing or
/// too short produce no alert.
std::vector<Alert> evaluateAlerts(const Snapshot& snapshot, const Watchlist& watchlist);

/// File-backed watchlist. Updates are optimistic: the caller names the
/// version it edited and a stale version is rejected with VersionConflict.
class WatchlistStore {
public:
    WatchlistStore(std::filesystem::path file, Catalog catalog);

    Watchlist current() const;
    /// Validates ids against the catalog (InvariantViolation), bumps the
    /// version and persists atomically.
    Watchlist replace(std::vector<WatchEntry> entries, std::uint64_t expected_version);

private:
    std::filesystem::path file_;
    Catalog catalog_;
    mutable std::mutex mutex_;
    Watchlist current_;
};

}  // namespace infoveil::alerts
