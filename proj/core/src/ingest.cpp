#include "infoveil/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "infoveil/csv.hpp"
#include "infoveil/error.hpp"
#include "infoveil/geo.hpp"
#include "infoveil/leadlag.hpp"

namespace infoveil::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// RateLimiter

RateLimiter::RateLimiter(double requests_per_minute) : rpm_(requests_per_minute) {
    if (!(requests_per_minute > 0.0)) throw Error(ErrorCode::InvalidArgument, "requests per minute must be positive");
    spacing_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
}

void RateLimiter::acquire() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + spacing_;
    }
    std::this_thread::sleep_until(slot);
}

std::shared_ptr<RateLimiter> RateLimiter::forHost(const std::string& host, double requests_per_minute) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::shared_ptr<RateLimiter>> registry;
    std::lock_guard lock(registry_mutex);
    auto& slot = registry[host];
    if (!slot) slot = std::make_shared<RateLimiter>(requests_per_minute);
    return slot;
}

std::chrono::milliseconds backoffDelay(const RetryPolicy& policy, int attempt, double unit) {
    const double base = static_cast<double>(policy.base_delay.count()) * std::pow(policy.factor, attempt - 1);
    const double jittered = base * (1.0 + policy.jitter * (2.0 * unit - 1.0));
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, jittered))));
}

std::string baseUrlFromEnv() {
    const char* v = std::getenv(kTrendsBaseUrlEnv);
    return v ? std::string(v) : std::string();
}

// ---------------------------------------------------------------------------
// TrendsClient

TrendsClient::TrendsClient(ClientConfig config) : config_(std::move(config)), rng_state_(config_.jitter_seed) {
    if (config_.base_url.empty()) config_.base_url = baseUrlFromEnv();
    if (config_.base_url.empty()) {
        throw Error(ErrorCode::InvalidArgument, std::string("no trends source configured; set ") + kTrendsBaseUrlEnv);
    }
    while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
    scheme_host_port_ = config_.base_url;
    if (!config_.sleep) config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    limiter_ = RateLimiter::forHost(scheme_host_port_, config_.requests_per_minute);
}

std::string TrendsClient::get(const std::string& path_and_query) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);

    bool last_was_throttle = false;
    std::string last_problem;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            // splitmix64 step for jitter
            rng_state_ += 0x9E3779B97F4A7C15ull;
            std::uint64_t z = rng_state_;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            z ^= z >> 31;
            const double unit = static_cast<double>(z >> 11) * 0x1.0p-53;
            config_.sleep(backoffDelay(config_.retry, attempt - 1, unit));
        }
        limiter_->acquire();
        ++requests_sent_;
        auto res = client.Get(path_and_query);
        if (!res) {
            last_was_throttle = false;
            last_problem = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        if (res->status == 429) {
            last_was_throttle = true;
            last_problem = "HTTP 429";
            continue;
        }
        if (res->status >= 500) {
            last_was_throttle = false;
            last_problem = "HTTP " + std::to_string(res->status);
            continue;
        }
        throw Error(ErrorCode::SourceUnavailable, "trends source answered HTTP " + std::to_string(res->status),
                    path_and_query);
    }
    if (last_was_throttle) {
        throw Error(ErrorCode::RateLimited,
                    "still throttled after " + std::to_string(config_.retry.max_attempts) + " attempts", path_and_query);
    }
    throw Error(ErrorCode::SourceUnavailable,
                "trends source unavailable after " + std::to_string(config_.retry.max_attempts) + " attempts (" +
                    last_problem + ")",
                path_and_query);
}

namespace {

json parseBody(const std::string& body, const std::string& where) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("response is not valid JSON: ") + e.what(), where);
    }
}

int rsvValue(const json& v, const std::string& where) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw Error(ErrorCode::MalformedResponse, "RSV value is not an integer", where);
    }
    const auto x = v.get<std::int64_t>();
    if (x < 0 || x > 100) throw Error(ErrorCode::MalformedResponse, "RSV value outside 0-100", where);
    return static_cast<int>(x);
}

}  // namespace

RsvSeries TrendsClient::fetchInterestOverTime(const QueryExpr& expr, std::string_view geo, const DateRange& window,
                                              Granularity granularity) {
    if (window.empty()) throw Error(ErrorCode::InvalidArgument, "empty window");
    if (!geo::isValidGeo(geo)) throw Error(ErrorCode::UnknownGeography, "unknown geography", std::string(geo));
    if (granularity == Granularity::WindowAggregate) {
        throw Error(ErrorCode::InvalidArgument, "over_time needs a dated granularity");
    }
    const std::string path = "/trends/over_time?" + httplib::detail::params_to_query_str({
                                                         {"q", expr.canonicalText()},
                                                         {"geo", std::string(geo)},
                                                         {"from", formatDate(window.from)},
                                                         {"to", formatDate(window.to)},
                                                         {"gran", std::string(toString(granularity))},
                                                     });
    const json doc = parseBody(get(path), path);

    RsvSeries out;
    out.geo = std::string(geo);
    out.granularity = granularity;
    out.pulled_at = utcTimestampNow();
    try {
        for (const auto& p : doc.at("points")) {
            out.points.push_back({parseDate(p.at("date").get<std::string>()), rsvValue(p.at("value"), path)});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("unexpected response shape: ") + e.what(), path);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedResponse) throw;
        throw Error(ErrorCode::MalformedResponse, e.what(), path);
    }
    try {
        validateRsvSeries(out, true);
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedResponse, e.what(), path);
    }
    return out;
}

std::vector<StateValue> TrendsClient::fetchInterestByState(const QueryExpr& expr, const DateRange& window) {
    if (window.empty()) throw Error(ErrorCode::InvalidArgument, "empty window");
    const std::string path = "/trends/by_state?" + httplib::detail::params_to_query_str({
                                                       {"q", expr.canonicalText()},
                                                       {"from", formatDate(window.from)},
                                                       {"to", formatDate(window.to)},
                                                   });
    const json doc = parseBody(get(path), path);

    std::map<std::string, std::optional<int>> by_geo;
    try {
        for (const auto& s : doc.at("states")) {
            const std::string code = s.at("geo").get<std::string>();
            if (!geo::isStateCode(code)) throw Error(ErrorCode::MalformedResponse, "unknown state '" + code + "'", path);
            const auto& v = s.at("value");
            if (!by_geo.emplace(code, v.is_null() ? std::nullopt : std::optional<int>(rsvValue(v, path))).second) {
                throw Error(ErrorCode::MalformedResponse, "state '" + code + "' listed twice", path);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("unexpected response shape: ") + e.what(), path);
    }

    std::vector<StateValue> out;
    int max_value = 0;
    for (const auto& code : geo::stateCodes()) {
        const auto it = by_geo.find(code);
        const std::optional<int> v = it == by_geo.end() ? std::nullopt : it->second;
        if (v) max_value = std::max(max_value, *v);
        out.push_back({code, v});
    }
    if (max_value != 0 && max_value != 100) {
        throw Error(ErrorCode::MalformedResponse, "state values peak at " + std::to_string(max_value), path);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string readText(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "no such file " + path.string(), path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double parseReal(const std::string& text, ErrorCode code, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw Error(code, "not a number: '" + text + "'", where);
    }
    if (used != text.size() || !std::isfinite(v)) throw Error(code, "not a number: '" + text + "'", where);
    return v;
}

std::string formatReal(double v) {
    // Shortest text that round-trips.
    return json(v).dump();
}

}  // namespace

IndicatorSeries parseIndicatorCsv(std::string_view text, IndicatorSchema schema, std::string name) {
    const bool weekly = schema == IndicatorSchema::UnemploymentWeekly;
    const std::vector<std::string> header = weekly ? std::vector<std::string>{"week_ending", "initial_claims"}
                                                   : std::vector<std::string>{"month", "new_applications"};
    const auto rows = csv::parse(text);
    if (rows.empty() || rows.front().fields != header) {
        throw Error(ErrorCode::SchemaMismatch, "expected header " + header[0] + "," + header[1], name);
    }
    IndicatorSeries out{std::move(name), weekly ? Granularity::Weekly : Granularity::Monthly, {}};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 2) throw Error(ErrorCode::SchemaMismatch, "expected 2 fields", where);
        Date date;
        try {
            date = (!weekly && row.fields[0].size() == 7) ? parseWindow(row.fields[0]).from : parseDate(row.fields[0]);
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaMismatch, e.what(), where);
        }
        const double value = parseReal(row.fields[1], ErrorCode::SchemaMismatch, where);
        if (value < 0.0) throw Error(ErrorCode::NegativeValue, "negative value " + row.fields[1], where);
        out.points.push_back({date, value});
    }
    std::stable_sort(out.points.begin(), out.points.end(),
                     [](const TimePoint& a, const TimePoint& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        if (out.points[i].date == out.points[i - 1].date) {
            throw Error(ErrorCode::NonMonotonicDates, "date " + formatDate(out.points[i].date) + " appears twice",
                        out.name);
        }
    }
    return out;
}

IndicatorSeries loadIndicatorCsv(const fs::path& path, IndicatorSchema schema) {
    const std::string name = schema == IndicatorSchema::UnemploymentWeekly ? kUnemploymentIndicator : kMedicaidIndicator;
    return parseIndicatorCsv(readText(path), schema, name);
}

std::string writeIndicatorCsv(const IndicatorSeries& series, IndicatorSchema schema) {
    std::string out = schema == IndicatorSchema::UnemploymentWeekly ? "week_ending,initial_claims\n"
                                                                     : "month,new_applications\n";
    for (const auto& p : series.points) {
        std::string date = formatDate(p.date);
        if (schema == IndicatorSchema::MedicaidMonthly) date = date.substr(0, 7);
        out += date + "," + formatReal(p.value) + "\n";
    }
    return out;
}

namespace {

const std::vector<std::string> kRsvHeader{"query_id", "geo", "granularity", "date", "value"};

}  // namespace

std::vector<RsvSeries> parseRsvCsv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows.front().fields != kRsvHeader) {
        throw Error(ErrorCode::SchemaMismatch, "expected header query_id,geo,granularity,date,value");
    }
    std::vector<RsvSeries> out;
    std::map<std::tuple<std::string, std::string, Granularity>, std::size_t> index;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        const std::string where = "line " + std::to_string(rows[i].line);
        if (f.size() != 5) throw Error(ErrorCode::SchemaMismatch, "expected 5 fields", where);
        Granularity g;
        Date date;
        try {
            g = parseGranularity(f[2]);
            date = parseDate(f[3]);
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaMismatch, e.what(), where);
        }
        if (g == Granularity::WindowAggregate) {
            throw Error(ErrorCode::SchemaMismatch, "window rows belong in the window panel file", where);
        }
        const double v = parseReal(f[4], ErrorCode::SchemaMismatch, where);
        if (v != std::floor(v) || v < 0 || v > 100) {
            throw Error(ErrorCode::SchemaMismatch, "RSV must be an integer 0-100", where);
        }
        const auto key = std::tuple{f[0], f[1], g};
        auto [it, inserted] = index.emplace(key, out.size());
        if (inserted) out.push_back(RsvSeries{f[0], f[1], g, {}, {}});
        out[it->second].points.push_back({date, static_cast<int>(v)});
    }
    for (auto& s : out) {
        std::stable_sort(s.points.begin(), s.points.end(),
                         [](const RsvPoint& a, const RsvPoint& b) { return a.date < b.date; });
        try {
            validateRsvSeries(s);
        } catch (const Error& e) {
            throw Error(ErrorCode::NonMonotonicDates, e.what(), e.detail());
        }
    }
    return out;
}

std::string writeRsvCsv(const std::vector<RsvSeries>& series) {
    std::string out = csv::joinRow(kRsvHeader) + "\n";
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            out += csv::joinRow({s.query_id, s.geo, std::string(toString(s.granularity)), formatDate(p.date),
                                 std::to_string(p.value)});
            out += '\n';
        }
    }
    return out;
}

StatePanel parseWindowPanelCsv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows.front().fields != kRsvHeader) {
        throw Error(ErrorCode::SchemaMismatch, "expected header query_id,geo,granularity,date,value");
    }
    std::vector<std::string> queries;
    std::vector<std::string> states;
    std::optional<DateRange> window;
    struct Cell {
        std::string query;
        std::string state;
        std::optional<double> value;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        const std::string where = "line " + std::to_string(rows[i].line);
        if (f.size() != 5) throw Error(ErrorCode::SchemaMismatch, "expected 5 fields", where);
        if (f[2] != "window") throw Error(ErrorCode::SchemaMismatch, "granularity must be 'window'", where);
        DateRange w;
        try {
            w = parseWindow(f[3]);
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaMismatch, e.what(), where);
        }
        if (window && !(*window == w)) throw Error(ErrorCode::SchemaMismatch, "mixed windows in one panel", where);
        window = w;
        if (!geo::isStateCode(f[1])) throw Error(ErrorCode::UnknownGeography, "unknown state '" + f[1] + "'", where);
        std::optional<double> v;
        if (!f[4].empty()) {
            v = parseReal(f[4], ErrorCode::SchemaMismatch, where);
            if (*v < 0 || *v > 100) throw Error(ErrorCode::SchemaMismatch, "RSV outside 0-100", where);
        }
        if (std::find(queries.begin(), queries.end(), f[0]) == queries.end()) queries.push_back(f[0]);
        if (std::find(states.begin(), states.end(), f[1]) == states.end()) states.push_back(f[1]);
        cells.push_back({f[0], f[1], v});
    }
    if (!window) throw Error(ErrorCode::SchemaMismatch, "window panel has no rows");
    // States in the reference order regardless of file order.
    std::vector<std::string> ordered;
    for (const auto& code : geo::stateCodes()) {
        if (std::find(states.begin(), states.end(), code) != states.end()) ordered.push_back(code);
    }
    StatePanel panel(std::move(ordered), std::move(queries), *window);
    for (const auto& c : cells) panel.set(*panel.stateIndex(c.state), *panel.queryIndex(c.query), c.value);
    return panel;
}

std::string writeWindowPanelCsv(const StatePanel& panel) {
    std::string out = csv::joinRow(kRsvHeader) + "\n";
    const std::string window = formatWindow(panel.window());
    for (std::size_t q = 0; q < panel.queryCount(); ++q) {
        for (std::size_t s = 0; s < panel.stateCount(); ++s) {
            const auto& v = panel.at(s, q);
            out += csv::joinRow({panel.queryIds()[q], panel.states()[s], "window", window, v ? formatReal(*v) : ""});
            out += '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot assembly

namespace {

void requireKnownQueries(const std::vector<RsvSeries>& series, const Catalog& catalog, const std::string& file) {
    for (const auto& s : series) {
        if (!catalog.find(s.query_id)) {
            throw Error(ErrorCode::InvariantViolation, "unknown query id '" + s.query_id + "' in " + file, s.query_id);
        }
        if (!geo::isValidGeo(s.geo)) throw Error(ErrorCode::UnknownGeography, "unknown geography in " + file, s.geo);
    }
}

}  // namespace

Snapshot buildSnapshotFromFixtures(const fs::path& dir, const Catalog& catalog, std::string created_at) {
    Snapshot s;
    s.created_at = std::move(created_at);
    s.catalog_version = catalog.version();
    s.national = parseRsvCsv(readText(dir / FixtureLayout::kNational));
    requireKnownQueries(s.national, catalog, FixtureLayout::kNational);
    for (const auto& x : s.national) {
        if (x.geo != "US") throw Error(ErrorCode::InvariantViolation, "national file holds geo " + x.geo, x.query_id);
    }
    if (fs::exists(dir / FixtureLayout::kStateWeekly)) {
        s.state_weekly = parseRsvCsv(readText(dir / FixtureLayout::kStateWeekly));
        requireKnownQueries(s.state_weekly, catalog, FixtureLayout::kStateWeekly);
    }
    s.state_window = parseWindowPanelCsv(readText(dir / FixtureLayout::kStateWindow));
    for (const auto& q : s.state_window.queryIds()) {
        if (!catalog.find(q)) throw Error(ErrorCode::InvariantViolation, "unknown query id '" + q + "' in panel", q);
    }
    if (fs::exists(dir / FixtureLayout::kUnemployment)) {
        s.indicators.push_back(loadIndicatorCsv(dir / FixtureLayout::kUnemployment, IndicatorSchema::UnemploymentWeekly));
    }
    if (fs::exists(dir / FixtureLayout::kMedicaid)) {
        s.indicators.push_back(loadIndicatorCsv(dir / FixtureLayout::kMedicaid, IndicatorSchema::MedicaidMonthly));
    }
    s.events = fs::exists(dir / FixtureLayout::kEvents) ? leadlag::parsePolicyEvents(readText(dir / FixtureLayout::kEvents))
                                                        : leadlag::defaultPolicyEvents();
    s.content_hash = computeContentHash(s);
    return s;
}

AcquisitionPlan defaultAcquisitionPlan() {
    return {
        {parseDate("2016-01-01"), parseDate("2020-04-15")},
        {parseDate("2020-01-01"), parseDate("2020-04-15")},
        {parseDate("2020-03-01"), parseDate("2020-04-15")},
        true,
    };
}

Snapshot buildSnapshotFromSource(const ClientConfig& config, const Catalog& catalog, const AcquisitionPlan& plan,
                                 std::vector<IndicatorSeries> indicators, std::string created_at,
                                 std::size_t parallelism) {
    struct QueryPull {
        RsvSeries national;
        std::vector<RsvSeries> states;
        std::vector<StateValue> panel;
    };

    const auto& queries = catalog.queries();
    std::vector<QueryPull> pulls(queries.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        TrendsClient client(config);
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            const auto& q = queries[i];
            QueryPull pull;
            pull.national = client.fetchInterestOverTime(q.expr, "US", plan.national_window, Granularity::Weekly);
            pull.national.query_id = q.id;
            if (plan.include_state_weekly) {
                for (const auto& code : geo::stateCodes()) {
                    auto s = client.fetchInterestOverTime(q.expr, code, plan.state_weekly_window, Granularity::Weekly);
                    s.query_id = q.id;
                    pull.states.push_back(std::move(s));
                }
            }
            pull.panel = client.fetchInterestByState(q.expr, plan.state_panel_window);
            pulls[i] = std::move(pull);
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(parallelism, queries.size()));
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < n_workers; ++w) jobs.push_back(std::async(std::launch::async, worker));
    std::exception_ptr failure;
    for (auto& j : jobs) {
        try {
            j.get();
        } catch (...) {
            if (!failure) failure = std::current_exception();
            next = queries.size();
        }
    }
    if (failure) std::rethrow_exception(failure);

    Snapshot s;
    s.created_at = std::move(created_at);
    s.catalog_version = catalog.version();
    std::vector<std::string> ids;
    for (const auto& q : queries) ids.push_back(q.id);
    s.state_window = StatePanel(geo::stateCodes(), ids, plan.state_panel_window);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        s.national.push_back(std::move(pulls[i].national));
        for (auto& st : pulls[i].states) s.state_weekly.push_back(std::move(st));
        for (std::size_t st = 0; st < pulls[i].panel.size(); ++st) {
            const auto& v = pulls[i].panel[st].value;
            s.state_window.set(st, i, v ? std::optional<double>(*v) : std::nullopt);
        }
    }
    for (const auto& ind : indicators) validateIndicatorSeries(ind);
    s.indicators = std::move(indicators);
    s.events = leadlag::defaultPolicyEvents();
    s.content_hash = computeContentHash(s);
    return s;
}

}  // namespace infoveil::ingest
