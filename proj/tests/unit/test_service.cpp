#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "infoveil/alerts.hpp"
#include "infoveil/error.hpp"
#include "infoveil/fixtures.hpp"
#include "infoveil/service.hpp"

using namespace infoveil;
using nlohmann::json;
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

fs::path tempDir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("infoveil_svc_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    return dir;
}

const Snapshot& reference() {
    static const Snapshot s = fixtures::referenceSnapshot(loadCatalog(), 20200416);
    return s;
}

struct Running {
    fs::path dir = tempDir("run");
    std::unique_ptr<service::ApiService> api;
    std::unique_ptr<httplib::Client> client;

    Running() {
        SnapshotStore(dir).commit(reference());
        service::ServiceConfig cfg;
        cfg.bind = "127.0.0.1:0";
        cfg.snapshot_dir = dir;
        api = std::make_unique<service::ApiService>(cfg, loadCatalog());
        api->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", api->port());
    }
    ~Running() {
        api->stop();
        fs::remove_all(dir);
    }

    std::pair<int, json> get(const std::string& path) {
        auto res = client->Get(path);
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
    std::pair<int, json> put(const std::string& path, const json& body) {
        auto res = client->Put(path, body.dump(), "application/json");
        REQUIRE(res);
        return {res->status, json::parse(res->body)};
    }
};

alerts::WatchEntry entry(std::string id, alerts::AlertRule rule, Granularity g = Granularity::Weekly) {
    alerts::WatchEntry e;
    e.query_id = std::move(id);
    e.granularity = g;
    e.rule = rule;
    return e;
}

}  // namespace

TEST_CASE("status mapping") {
    CHECK(service::httpStatusFor(ErrorCode::NotFound) == 404);
    CHECK(service::httpStatusFor(ErrorCode::UnknownGeography) == 404);
    CHECK(service::httpStatusFor(ErrorCode::VersionConflict) == 409);
    CHECK(service::httpStatusFor(ErrorCode::BadIndex) == 400);
    CHECK(service::httpStatusFor(ErrorCode::ConstantColumn) == 422);
    CHECK(service::httpStatusFor(ErrorCode::SourceUnavailable) == 503);
    CHECK(service::httpStatusFor(ErrorCode::IoError) == 500);
}

TEST_CASE("config file and environment overrides") {
    const auto dir = tempDir("cfg");
    const auto file = dir / "config.json";
    std::ofstream(file) << R"({"bind":"0.0.0.0:9000","snapshot_dir":"/data/snaps","refresh_hours":6})";
    auto cfg = service::loadServiceConfig(file);
    CHECK(cfg.bind == "0.0.0.0:9000");
    CHECK(cfg.snapshot_dir == fs::path("/data/snaps"));
    CHECK(cfg.refresh_hours == 6.0);

    setenv("INFOVEIL_BIND", "127.0.0.1:7000", 1);
    setenv("INFOVEIL_REFRESH_HOURS", "0.5", 1);
    cfg = service::loadServiceConfig(file);
    CHECK(cfg.bind == "127.0.0.1:7000");
    CHECK(cfg.refresh_hours == 0.5);
    setenv("INFOVEIL_REFRESH_HOURS", "soon", 1);
    CHECK(codeOf([&] { service::loadServiceConfig(file); }) == ErrorCode::InvalidArgument);
    unsetenv("INFOVEIL_BIND");
    unsetenv("INFOVEIL_REFRESH_HOURS");

    CHECK(codeOf([&] { service::loadServiceConfig(dir / "missing.json"); }) == ErrorCode::NotFound);
    fs::remove_all(dir);
}

TEST_CASE("startup failures") {
    const auto empty = tempDir("empty");
    service::ServiceConfig cfg;
    cfg.bind = "127.0.0.1:0";
    cfg.snapshot_dir = empty;
    service::ApiService api(cfg, loadCatalog());
    CHECK(codeOf([&] { api.start(); }) == ErrorCode::StoreUnavailable);

    Running first;
    service::ServiceConfig clash;
    clash.bind = "127.0.0.1:" + std::to_string(first.api->port());
    clash.snapshot_dir = first.dir;
    service::ApiService second(clash, loadCatalog());
    CHECK(codeOf([&] { second.start(); }) == ErrorCode::BindFailure);
    fs::remove_all(empty);
}

TEST_CASE("trends endpoint passes stored values through unchanged") {
    Running r;
    const auto [status, body] = r.get("/api/v1/trends?query=medicaid&geo=US");
    CHECK(status == 200);
    CHECK(body["snapshot"] == reference().content_hash);
    const auto* s = reference().findSeries("medicaid", "US");
    REQUIRE(body["data"]["points"].size() == s->points.size());
    for (std::size_t i = 0; i < s->points.size(); ++i) {
        CHECK(body["data"]["points"][i]["date"] == formatDate(s->points[i].date));
        CHECK(body["data"]["points"][i]["value"] == s->points[i].value);
    }

    const auto [st2, windowed] = r.get("/api/v1/trends?query=medicaid&geo=US&from=2020-01&to=2020-03");
    CHECK(st2 == 200);
    CHECK(windowed["data"]["points"].size() == 13);
}

TEST_CASE("errors carry a structured body") {
    Running r;
    auto [status, body] = r.get("/api/v1/trends?query=no-such-query");
    CHECK(status == 404);
    CHECK(body["code"] == "NotFound");
    CHECK(body.contains("message"));
    CHECK(body.contains("detail"));

    std::tie(status, body) = r.get("/api/v1/trends?query=medicaid&geo=US-ZZ");
    CHECK(status == 404);

    std::tie(status, body) = r.get("/api/v1/pca?k=99");
    CHECK(status == 400);
    CHECK(body["code"] == "KTooLarge");

    std::tie(status, body) = r.get("/api/v1/pca/0/interpret");
    CHECK(status == 400);
    CHECK(body["code"] == "BadIndex");

    std::tie(status, body) = r.get("/api/v1/trends");
    CHECK(status == 400);

    std::tie(status, body) = r.get("/api/v1/nothing-here");
    CHECK(status == 404);
    CHECK(body["code"] == "NotFound");
}

TEST_CASE("analytic endpoints") {
    Running r;
    auto [status, body] = r.get("/api/v1/change");
    CHECK(status == 200);
    bool saw = false;
    for (const auto& row : body["data"]["rows"]) {
        if (row["query_id"] == "health-insurance") {
            CHECK(row["change_percent"] == -18.0);
            saw = true;
        }
    }
    CHECK(saw);

    std::tie(status, body) = r.get("/api/v1/correlation");
    CHECK(status == 200);
    CHECK(body["data"]["dropped"].size() == 9);
    CHECK(body["data"]["query_ids"].size() == 30);

    std::tie(status, body) = r.get("/api/v1/pca/1/interpret");
    CHECK(status == 200);
    std::set<std::string> salient;
    for (const auto& s : body["data"]["salient"]) salient.insert(s["query_id"]);
    CHECK(salient == std::set<std::string>(fixtures::plantedQueries().begin(), fixtures::plantedQueries().end()));
    std::vector<std::string> top;
    for (const auto& s : body["data"]["top_states"]) top.push_back(s["state"]);
    CHECK(top == fixtures::plantedStates());

    std::tie(status, body) = r.get("/api/v1/events/leadtime?query=social-distancing");
    CHECK(status == 200);

    std::tie(status, body) = r.get("/api/v1/leadlag?query=unemployment-benefits&lag_min=-4&lag_max=4");
    CHECK(status == 200);
    CHECK(body["data"]["best"]["lag"] == 1);

    std::tie(status, body) = r.get("/api/v1/choropleth?query=medicaid");
    CHECK(status == 200);
    CHECK(body["data"]["values"].size() == 51);

    std::tie(status, body) = r.get("/api/v1/panel");
    CHECK(status == 200);
    CHECK(body["data"]["states"].size() == 51);

    std::tie(status, body) = r.get("/api/v1/catalog");
    CHECK(body["data"]["queries"].size() == 39);
}

TEST_CASE("watchlist versioning and alerts") {
    Running r;
    auto [status, body] = r.get("/api/v1/watchlist");
    CHECK(status == 200);
    CHECK(body["data"]["version"] == 0);

    alerts::Watchlist wl;
    wl.entries = {entry("how-to-make-coronavirus-mask", alerts::ThresholdCross{50}, Granularity::Daily),
                  entry("health-insurance", alerts::PercentChangeOver{4, 50.0})};
    json put = alerts::toJson(wl);
    std::tie(status, body) = r.put("/api/v1/watchlist", put);
    CHECK(status == 200);
    CHECK(body["data"]["version"] == 1);

    // Editing from the stale version is refused.
    std::tie(status, body) = r.put("/api/v1/watchlist", put);
    CHECK(status == 409);
    CHECK(body["code"] == "VersionConflict");

    put["version"] = 1;
    put["entries"][0]["query_id"] = "not-in-catalog";
    std::tie(status, body) = r.put("/api/v1/watchlist", put);
    CHECK(status == 400);

    std::tie(status, body) = r.get("/api/v1/alerts");
    CHECK(status == 200);
    CHECK(body["data"]["watchlist_version"] == 1);
    REQUIRE(body["data"]["alerts"].size() == 1);
    const auto& a = body["data"]["alerts"][0];
    CHECK(a["query_id"] == "how-to-make-coronavirus-mask");
    CHECK(a["trigger_date"] == "2020-03-23");
    CHECK(a["snapshot"] == reference().content_hash);

    const auto again = r.get("/api/v1/alerts").second;
    CHECK(again == body);

    // The watchlist survives a restart.
    alerts::WatchlistStore reopened(r.dir / "watchlist.json", loadCatalog());
    CHECK(reopened.current().version == 1);
    CHECK(reopened.current().entries.size() == 2);
}

TEST_CASE("reload swaps to a newer snapshot") {
    Running r;
    CHECK_FALSE(r.api->reload());
    const auto next = fixtures::referenceSnapshot(loadCatalog(), 99);
    SnapshotStore(r.dir).commit(next);
    CHECK(r.api->reload());
    CHECK(r.get("/api/v1/catalog").second["snapshot"] == next.content_hash);
}

TEST_CASE("refresher commits ingested snapshots") {
    const auto dir = tempDir("refresh");
    SnapshotStore(dir).commit(reference());
    service::ServiceConfig cfg;
    cfg.bind = "127.0.0.1:0";
    cfg.snapshot_dir = dir;
    cfg.refresh_hours = 0.05 / 3600.0;  // 50 ms
    service::ApiService api(cfg, loadCatalog());
    api.start();
    const auto next = fixtures::referenceSnapshot(loadCatalog(), 3);
    std::atomic<int> calls{0};
    api.startRefresher([&] {
        ++calls;
        return next;
    });
    for (int i = 0; i < 100 && api.snapshot()->content_hash != next.content_hash; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK(api.snapshot()->content_hash == next.content_hash);
    api.stop();
    CHECK(calls >= 1);
    fs::remove_all(dir);
}

TEST_CASE("alert rules") {
    Snapshot s;
    s.content_hash = "h";
    RsvSeries flat{"flat", "US", Granularity::Weekly, {}, ""};
    RsvSeries jump{"jump", "US", Granularity::Weekly, {}, ""};
    RsvSeries zero{"zero", "US", Granularity::Weekly, {}, ""};
    Date d = parseDate("2020-01-05");
    for (int i = 0; i < 8; ++i, d = addDays(d, 7)) {
        flat.points.push_back({d, 40});
        jump.points.push_back({d, i < 4 ? 20 : 60});
        zero.points.push_back({d, i < 4 ? 0 : 100});
    }
    s.national = {flat, jump, zero};

    alerts::Watchlist wl;
    wl.entries = {entry("flat", alerts::PercentChangeOver{4, 10.0}), entry("jump", alerts::PercentChangeOver{4, 100.0}),
                  entry("zero", alerts::PercentChangeOver{4, 10.0}), entry("flat", alerts::ThresholdCross{41}),
                  entry("jump", alerts::ThresholdCross{60}), entry("missing", alerts::ThresholdCross{1})};
    const auto out = alerts::evaluateAlerts(s, wl);
    REQUIRE(out.size() == 2);
    CHECK(out[0].query_id == "jump");
    CHECK(out[0].observed == 200.0);
    CHECK(out[0].trigger_date == parseDate("2020-02-23"));
    CHECK(std::holds_alternative<alerts::ThresholdCross>(out[1].rule));
    CHECK(out[1].trigger_date == parseDate("2020-02-02"));
    CHECK(alerts::evaluateAlerts(s, wl) == out);
}

TEST_CASE("watchlist documents") {
    CHECK(codeOf([] { alerts::entriesFromJson(json::parse(R"([{"query_id":"medicaid","rule":{"type":"nope"}}])")); }) ==
          ErrorCode::InvalidArgument);
    CHECK(codeOf([] { alerts::entriesFromJson(json::parse(R"([{"rule":{"type":"threshold_cross","rsv_value":5}}])")); }) ==
          ErrorCode::InvalidArgument);
    const auto e = alerts::entriesFromJson(
        json::parse(R"([{"query_id":"medicaid","rule":{"type":"threshold_cross","rsv_value":5}}])"));
    REQUIRE(e.size() == 1);
    CHECK(e[0].geo == "US");
    CHECK(e[0].granularity == Granularity::Weekly);

    alerts::Watchlist wl{{entry("medicaid", alerts::PercentChangeOver{2, 25.0})}, 3};
    const auto j = alerts::toJson(wl);
    CHECK(alerts::entriesFromJson(j["entries"]) == wl.entries);
}
