#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "infoveil/error.hpp"
#include "infoveil/fixtures.hpp"
#include "infoveil/geo.hpp"
#include "infoveil/ingest.hpp"
#include "infoveil/mock_trends.hpp"

using namespace infoveil;
using namespace infoveil::ingest;
namespace fs = std::filesystem;

namespace {

ErrorCode codeOf(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

struct Fixture {
    MockTrendsServer server;
    std::vector<std::chrono::milliseconds> sleeps;

    Fixture() { server.start(); }
    ~Fixture() { server.stop(); }

    ClientConfig config(double rpm = 600000.0) {
        ClientConfig c;
        c.base_url = server.baseUrl();
        c.requests_per_minute = rpm;
        c.timeout = std::chrono::seconds(5);
        c.sleep = [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
        return c;
    }
};

const DateRange kMarch{parseDate("2020-03-01"), parseDate("2020-03-31")};

std::vector<TimePoint> rampShares() {
    std::vector<TimePoint> out;
    for (Date d = parseDate("2020-03-01"); d <= parseDate("2020-03-29"); d = addDays(d, 7))
        out.push_back({d, 0.001 * (1 + daysBetween(parseDate("2020-03-01"), d))});
    return out;
}

fs::path tempDir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("infoveil_ingest_" + name + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    return dir;
}

fs::path dataFile(const char* name) { return fs::path(INFOVEIL_TEST_DATA_DIR) / name; }

}  // namespace

TEST_CASE("over_time response is normalised to a peak of 100") {
    Fixture f;
    const auto q = parseQueryExpr("face mask");
    f.server.setTimeShares(q.canonicalText(), "US", Granularity::Weekly, rampShares());
    TrendsClient client(f.config());
    const auto s = client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly);
    REQUIRE(s.points.size() == 5);
    CHECK(s.points.back().value == 100);
    CHECK(s.points.front().value == 3);  // 1/29 of the peak
    CHECK(s.geo == "US");
    CHECK(client.requestsSent() == 1);
    CHECK_NOTHROW(validateRsvSeries(s, true));
}

TEST_CASE("429 responses are retried with backoff") {
    Fixture f;
    const auto q = parseQueryExpr("face mask");
    f.server.setTimeShares(q.canonicalText(), "US", Granularity::Weekly, rampShares());
    f.server.script({{429, {}}, {429, {}}, {429, {}}});
    TrendsClient client(f.config());
    const auto s = client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly);
    CHECK(s.points.size() == 5);
    CHECK(client.requestsSent() == 4);
    REQUIRE(f.sleeps.size() == 3);
    // Jitter is +/-20%, so each delay stays inside its band.
    CHECK(f.sleeps[0].count() >= 800);
    CHECK(f.sleeps[0].count() <= 1200);
    CHECK(f.sleeps[1].count() >= 1600);
    CHECK(f.sleeps[1].count() <= 2400);
    CHECK(f.sleeps[2].count() >= 3200);
    CHECK(f.sleeps[2].count() <= 4800);
    CHECK(f.server.requestLog().size() == 4);
}

TEST_CASE("exhausted retries") {
    Fixture f;
    const auto q = parseQueryExpr("face mask");
    SUBCASE("server errors") {
        f.server.script(std::vector<MockTrendsServer::ScriptedResponse>(5, {500, {}}));
        TrendsClient client(f.config());
        CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
              ErrorCode::SourceUnavailable);
        CHECK(client.requestsSent() == 5);
    }
    SUBCASE("rate limiting") {
        f.server.script(std::vector<MockTrendsServer::ScriptedResponse>(5, {429, {}}));
        TrendsClient client(f.config());
        CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
              ErrorCode::RateLimited);
        CHECK(f.sleeps.size() == 4);
    }
    SUBCASE("client errors are not retried") {
        f.server.script({{403, {}}});
        TrendsClient client(f.config());
        CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
              ErrorCode::SourceUnavailable);
        CHECK(client.requestsSent() == 1);
    }
}

TEST_CASE("malformed bodies") {
    Fixture f;
    const auto q = parseQueryExpr("face mask");
    TrendsClient client(f.config());
    f.server.script({{200, std::string(R"({"points":[{"date":"2020-03-01","val)")}});
    CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
          ErrorCode::MalformedResponse);
    f.server.script({{200, std::string(R"({"points":[{"date":"2020-03-01","value":140}]})")}});
    CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
          ErrorCode::MalformedResponse);
    f.server.script({{200, std::string(R"({"points":[{"date":"2020-03-08","value":100},{"date":"2020-03-01","value":50}]})")}});
    CHECK(codeOf([&] { client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly); }) ==
          ErrorCode::MalformedResponse);
    CHECK(codeOf([&] { client.fetchInterestOverTime(q, "XX", kMarch, Granularity::Weekly); }) ==
          ErrorCode::UnknownGeography);
}

TEST_CASE("connection failures surface as SourceUnavailable") {
    int port = 0;
    {
        Fixture f;
        port = f.server.port();
    }
    ClientConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.requests_per_minute = 600000.0;
    c.timeout = std::chrono::seconds(2);
    int sleeps = 0;
    c.sleep = [&](std::chrono::milliseconds) { ++sleeps; };
    TrendsClient client(c);
    CHECK(codeOf([&] { client.fetchInterestOverTime(parseQueryExpr("x"), "US", kMarch, Granularity::Weekly); }) ==
          ErrorCode::SourceUnavailable);
    CHECK(sleeps == 4);
}

TEST_CASE("by_state returns 51 entries in state order") {
    Fixture f;
    const auto q = parseQueryExpr("unemployment");
    std::map<std::string, std::optional<double>> shares;
    const auto& codes = geo::stateCodes();
    for (std::size_t i = 0; i < codes.size(); ++i) shares[codes[i]] = 0.01 * (1 + i);

    SUBCASE("complete") {
        f.server.setStateShares(q.canonicalText(), shares);
        TrendsClient client(f.config());
        const auto v = client.fetchInterestByState(q, kMarch);
        REQUIRE(v.size() == 51);
        for (std::size_t i = 0; i < 51; ++i) {
            CHECK(v[i].geo == codes[i]);
            CHECK(v[i].value.has_value());
        }
        CHECK(v[50].value == 100);
    }
    SUBCASE("omitted states are missing") {
        shares["US-WY"] = std::nullopt;
        shares.erase("US-VT");
        shares.erase("US-AK");
        f.server.setStateShares(q.canonicalText(), shares);
        TrendsClient client(f.config());
        const auto v = client.fetchInterestByState(q, kMarch);
        REQUIRE(v.size() == 51);
        const auto missing = std::count_if(v.begin(), v.end(), [](const StateValue& s) { return !s.value; });
        CHECK(missing == 3);
        for (const auto& s : v) {
            if (s.geo == "US-WY" || s.geo == "US-VT" || s.geo == "US-AK") CHECK_FALSE(s.value.has_value());
        }
        // Highest remaining share is WV.
        CHECK(std::find_if(v.begin(), v.end(), [](const StateValue& s) { return s.geo == "US-WV"; })->value == 100);
    }
    SUBCASE("all zero") {
        for (auto& [k, s] : shares) s = 0.0;
        f.server.setStateShares(q.canonicalText(), shares);
        TrendsClient client(f.config());
        const auto v = client.fetchInterestByState(q, kMarch);
        for (const auto& s : v) CHECK(s.value == 0);
    }
}

TEST_CASE("requests to one host are spaced by the rate limit") {
    Fixture f;
    const auto q = parseQueryExpr("face mask");
    f.server.setTimeShares(q.canonicalText(), "US", Granularity::Weekly, rampShares());
    TrendsClient client(f.config(600.0));  // one request per 100 ms
    for (int i = 0; i < 5; ++i) client.fetchInterestOverTime(q, "US", kMarch, Granularity::Weekly);
    const auto log = f.server.requestLog();
    REQUIRE(log.size() == 5);
    for (std::size_t i = 1; i < log.size(); ++i) {
        const auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(log[i].at - log[i - 1].at);
        CHECK(gap.count() >= 90);
    }
}

TEST_CASE("rate limiter registry is per host") {
    auto a = RateLimiter::forHost("registry-test-a:1", 60.0);
    auto b = RateLimiter::forHost("registry-test-a:1", 6000.0);
    auto c = RateLimiter::forHost("registry-test-b:1", 6000.0);
    CHECK(a == b);
    CHECK(a->requestsPerMinute() == 60.0);
    CHECK(a != c);
}

TEST_CASE("backoff delays") {
    RetryPolicy p;
    CHECK(backoffDelay(p, 1, 0.5).count() == 1000);
    CHECK(backoffDelay(p, 1, 0.0).count() == 800);
    CHECK(backoffDelay(p, 2, 0.5).count() == 2000);
    CHECK(backoffDelay(p, 3, 0.5).count() == 4000);
    p.jitter = 0.0;
    CHECK(backoffDelay(p, 3, 0.99).count() == 4000);
}

TEST_CASE("bundled synthetic indicator files parse") {
    const auto claims = loadIndicatorCsv(dataFile("unemployment_claims_synthetic.csv"), IndicatorSchema::UnemploymentWeekly);
    CHECK(claims.points.size() >= 220);
    CHECK(claims.granularity == Granularity::Weekly);
    CHECK(std::chrono::weekday(std::chrono::sys_days(claims.points.front().date)) == std::chrono::Saturday);
    const auto medicaid = loadIndicatorCsv(dataFile("medicaid_applications_synthetic.csv"), IndicatorSchema::MedicaidMonthly);
    CHECK(medicaid.granularity == Granularity::Monthly);
    CHECK(medicaid.points.size() >= 50);
}

TEST_CASE("indicator parsing rules") {
    const auto s = parseIndicatorCsv("week_ending,initial_claims\n2020-03-21,2920160\n2020-03-14,251416\n",
                                     IndicatorSchema::UnemploymentWeekly, "claims");
    REQUIRE(s.points.size() == 2);
    CHECK(s.points[0].date == parseDate("2020-03-14"));
    CHECK(s.points[1].value == 2920160.0);

    CHECK(codeOf([] {
              parseIndicatorCsv("week_ending,initial_claims\n2020-03-14,-5\n", IndicatorSchema::UnemploymentWeekly, "c");
          }) == ErrorCode::NegativeValue);
    CHECK(codeOf([] {
              parseIndicatorCsv("week,claims\n2020-03-14,5\n", IndicatorSchema::UnemploymentWeekly, "c");
          }) == ErrorCode::SchemaMismatch);
    CHECK(codeOf([] {
              parseIndicatorCsv("week_ending,initial_claims\n2020-03-14,5\n2020-03-14,6\n",
                                IndicatorSchema::UnemploymentWeekly, "c");
          }) == ErrorCode::NonMonotonicDates);

    const auto m = parseIndicatorCsv("month,new_applications\n2020-02,10\n2020-03-01,12\n",
                                     IndicatorSchema::MedicaidMonthly, "m");
    CHECK(m.points[0].date == parseDate("2020-02-01"));
    CHECK(parseIndicatorCsv(writeIndicatorCsv(m, IndicatorSchema::MedicaidMonthly), IndicatorSchema::MedicaidMonthly,
                            "m") == m);
}

TEST_CASE("RSV and window panel CSV round-trips") {
    const auto snap = fixtures::referenceSnapshot(loadCatalog(), 7);
    std::vector<RsvSeries> few(snap.national.begin(), snap.national.begin() + 3);
    CHECK(parseRsvCsv(writeRsvCsv(few)) == few);
    CHECK(parseWindowPanelCsv(writeWindowPanelCsv(snap.state_window)) == snap.state_window);
    CHECK(snap.state_window.hasMissing());
}

TEST_CASE("fixture directory round-trips into the same snapshot") {
    const auto catalog = loadCatalog();
    const auto snap = fixtures::referenceSnapshot(catalog, 11);
    const auto dir = tempDir("fixtures");
    fixtures::writeFixtureDirectory(snap, dir);
    const auto rebuilt = buildSnapshotFromFixtures(dir, catalog, snap.created_at);
    CHECK(rebuilt.content_hash == snap.content_hash);
    CHECK(rebuilt == snap);
    fs::remove_all(dir);

    CHECK(codeOf([&] { buildSnapshotFromFixtures(tempDir("empty"), catalog, "x"); }) == ErrorCode::NotFound);
}

TEST_CASE("snapshot acquisition from the mock source") {
    Fixture f;
    const auto full = loadCatalog();
    Catalog small({full.queries()[0], full.queries()[1], full.queries()[2]}, "test");

    AcquisitionPlan plan;
    plan.national_window = {parseDate("2020-01-01"), parseDate("2020-04-15")};
    plan.state_weekly_window = {parseDate("2020-03-01"), parseDate("2020-03-31")};
    plan.state_panel_window = {parseDate("2020-03-01"), parseDate("2020-04-15")};
    plan.include_state_weekly = true;

    for (const auto& q : small.queries()) {
        std::vector<TimePoint> weekly;
        for (Date d = parseDate("2020-01-05"); d <= parseDate("2020-04-12"); d = addDays(d, 7))
            weekly.push_back({d, 1.0 + daysBetween(parseDate("2020-01-05"), d)});
        f.server.setTimeShares(q.expr.canonicalText(), "US", Granularity::Weekly, weekly);
        for (const auto& code : geo::stateCodes())
            f.server.setTimeShares(q.expr.canonicalText(), code, Granularity::Weekly, weekly);
        std::map<std::string, std::optional<double>> shares;
        for (const auto& code : geo::stateCodes()) shares[code] = 1.0 + code[3] + code[4];
        shares.erase("US-DC");
        f.server.setStateShares(q.expr.canonicalText(), shares);
    }

    const auto snap = buildSnapshotFromSource(f.config(), small, plan, {}, "2020-04-16T00:00:00Z", 2);
    CHECK(snap.national.size() == 3);
    CHECK(snap.state_weekly.size() == 3 * 51);
    CHECK(snap.national[1].query_id == small.queries()[1].id);
    CHECK(snap.national[0].points.back().value == 100);
    CHECK(snap.state_window.queryCount() == 3);
    CHECK_FALSE(snap.state_window.at(*snap.state_window.stateIndex("US-DC"), 0).has_value());
    CHECK(snap.content_hash == computeContentHash(snap));
    CHECK(f.server.requestLog().size() == 3 * (1 + 51 + 1));

    // Same content whatever the worker interleaving; only pull stamps differ.
    const auto strip = [](Snapshot s) {
        for (auto& x : s.national) x.pulled_at.clear();
        for (auto& x : s.state_weekly) x.pulled_at.clear();
        s.content_hash = computeContentHash(s);
        return s;
    };
    const auto again = buildSnapshotFromSource(f.config(), small, plan, {}, "2020-04-16T00:00:00Z", 3);
    CHECK(strip(again) == strip(snap));
    CHECK_FALSE(snap.national[0].pulled_at.empty());
}
