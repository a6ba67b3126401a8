#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "infoveil/query.hpp"
#include "infoveil/series.hpp"
#include "infoveil/snapshot.hpp"

namespace infoveil::ingest {

inline constexpr const char* kTrendsBaseUrlEnv = "INFOVEIL_TRENDS_BASE_URL";

// ---------------------------------------------------------------------------
// Rate limiting and retries

/// Enforces a minimum spacing between requests to one host.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute);

    /// Blocks until the next request slot and claims it.
    void acquire();
    double requestsPerMinute() const { return rpm_; }

    /// Process-wide limiter for `host`, created on first use. A later call
    /// with a different rate keeps the existing limiter.
    static std::shared_ptr<RateLimiter> forHost(const std::string& host, double requests_per_minute);

private:
    double rpm_;
    std::chrono::steady_clock::duration spacing_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    double jitter = 0.2;  // +/- fraction of each delay
};

/// Delay before retry `attempt` (1-based), jitter drawn from `unit` in [0, 1).
std::chrono::milliseconds backoffDelay(const RetryPolicy& policy, int attempt, double unit);

struct ClientConfig {
    std::string base_url;  // e.g. "http://127.0.0.1:8765"
    RetryPolicy retry;
    double requests_per_minute = 60.0;
    std::chrono::seconds timeout{30};
    std::uint64_t jitter_seed = 0x5eed;
    /// Sleep hook; tests replace it to avoid wall-clock waits.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Reads INFOVEIL_TRENDS_BASE_URL; empty when unset.
std::string baseUrlFromEnv();

struct StateValue {
    std::string geo;
    std::optional<int> value;  // nullopt: state absent from the source

    bool operator==(const StateValue&) const = default;
};

/// Client for the Trends-compatible JSON wire contract:
///   GET /trends/over_time?q=&geo=&from=&to=&gran=  -> {"points":[{"date","value"}]}
///   GET /trends/by_state?q=&from=&to=               -> {"states":[{"geo","value"|null}]}
/// 429 and 5xx responses are retried with exponential backoff.
class TrendsClient {
public:
    explicit TrendsClient(ClientConfig config);

    /// Throws SourceUnavailable, RateLimited, MalformedResponse.
    RsvSeries fetchInterestOverTime(const QueryExpr& expr, std::string_view geo, const DateRange& window,
                                    Granularity granularity);
    /// Exactly 51 entries in geo::stateCodes() order.
    std::vector<StateValue> fetchInterestByState(const QueryExpr& expr, const DateRange& window);

    int requestsSent() const { return requests_sent_; }

private:
    std::string get(const std::string& path_and_query);

    ClientConfig config_;
    std::string scheme_host_port_;
    std::shared_ptr<RateLimiter> limiter_;
    std::uint64_t rng_state_;
    int requests_sent_ = 0;
};

// ---------------------------------------------------------------------------
// Files

enum class IndicatorSchema { UnemploymentWeekly, MedicaidMonthly };

/// `week_ending,initial_claims` or `month,new_applications` (month as
/// YYYY-MM or YYYY-MM-DD). Rows are sorted by date. Throws SchemaMismatch,
/// NonMonotonicDates (duplicate dates), NegativeValue.
IndicatorSeries loadIndicatorCsv(const std::filesystem::path& path, IndicatorSchema schema);
IndicatorSeries parseIndicatorCsv(std::string_view text, IndicatorSchema schema, std::string name);
std::string writeIndicatorCsv(const IndicatorSeries& series, IndicatorSchema schema);

/// `query_id,geo,granularity,date,value`. For window rows the date column
/// holds "FROM/TO" and an empty value marks a missing state.
std::vector<RsvSeries> parseRsvCsv(std::string_view text);
std::string writeRsvCsv(const std::vector<RsvSeries>& series);
StatePanel parseWindowPanelCsv(std::string_view text);
std::string writeWindowPanelCsv(const StatePanel& panel);

// ---------------------------------------------------------------------------
// Snapshot assembly

/// Standard fixture directory layout consumed by buildSnapshotFromFixtures.
struct FixtureLayout {
    static constexpr const char* kNational = "national.csv";
    static constexpr const char* kStateWeekly = "state_weekly.csv";
    static constexpr const char* kStateWindow = "state_window.csv";
    static constexpr const char* kUnemployment = "unemployment.csv";
    static constexpr const char* kMedicaid = "medicaid.csv";
    static constexpr const char* kEvents = "events.csv";
};

inline constexpr const char* kUnemploymentIndicator = "unemployment_claims";
inline constexpr const char* kMedicaidIndicator = "medicaid_applications";

/// Files other than national.csv and state_window.csv are optional; events
/// default to the bundled policy events.
Snapshot buildSnapshotFromFixtures(const std::filesystem::path& dir, const Catalog& catalog,
                                   std::string created_at);

struct AcquisitionPlan {
    DateRange national_window;      // weekly, geo US
    DateRange state_weekly_window;  // weekly, every state
    DateRange state_panel_window;   // window aggregate by state
    bool include_state_weekly = true;
};

/// Windows used for the reference datasets.
AcquisitionPlan defaultAcquisitionPlan();

/// Pulls every catalog query through the client. Queries run concurrently
/// up to `parallelism`, sharing the client's rate limiter.
Snapshot buildSnapshotFromSource(const ClientConfig& config, const Catalog& catalog, const AcquisitionPlan& plan,
                                 std::vector<IndicatorSeries> indicators, std::string created_at,
                                 std::size_t parallelism = 4);

}  // namespace infoveil::ingest
