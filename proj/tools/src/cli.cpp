#include "infoveil_cli/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "infoveil/alerts.hpp"
#include "infoveil/fixtures.hpp"
#include "infoveil/ingest.hpp"
#include "infoveil/report.hpp"
#include "infoveil/service.hpp"
#include "infoveil/snapshot.hpp"

namespace infoveil::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exitCodeFor(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::IoError:
        case ErrorCode::UnknownGeography:
            return kExitNotFound;
        case ErrorCode::CorruptSnapshot:
            return kExitCorrupt;
        case ErrorCode::SourceUnavailable:
        case ErrorCode::RateLimited:
        case ErrorCode::MalformedResponse:
        case ErrorCode::StoreUnavailable:
        case ErrorCode::BindFailure:
            return kExitUnavailable;
        case ErrorCode::InvalidArgument:
            return kExitUsage;
        default:
            return kExitData;
    }
}

namespace {

std::atomic<bool> g_stop{false};
extern "C" void onSignal(int) { g_stop = true; }

std::string readFile(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + p.string(), p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string defaultStore() {
    const char* v = std::getenv("INFOVEIL_SNAPSHOT_DIR");
    return v && *v ? v : "snapshots";
}

struct Common {
    std::string snapshot;  // file path or hash
    std::string store = defaultStore();
    std::string out;
    std::string format = "csv";

    void attach(CLI::App* cmd) {
        cmd->add_option("--snapshot", snapshot, "Snapshot file or hash (default: LATEST in the store)");
        cmd->add_option("--store", store, "Snapshot store directory")->capture_default_str();
        cmd->add_option("--out", out, "Output directory (default: stdout)");
        cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    }

    std::shared_ptr<const Snapshot> load() const {
        if (!snapshot.empty() && fs::is_regular_file(snapshot)) {
            return std::make_shared<const Snapshot>(parseSnapshot(readFile(snapshot)));
        }
        SnapshotStore s(store);
        return snapshot.empty() ? s.loadLatest() : s.load(snapshot);
    }
};

void writeFile(const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary | std::ios::trunc);
    o << text;
    if (!o) throw Error(ErrorCode::IoError, "cannot write " + p.string(), p.string());
}

void emit(const Common& c, const std::string& command, const report::Report& r, std::ostream& out) {
    if (c.format == "json") {
        const std::string text = r.data.dump(2) + "\n";
        if (c.out.empty()) {
            out << text;
        } else {
            fs::create_directories(c.out);
            writeFile(fs::path(c.out) / (command + ".json"), text);
        }
        return;
    }
    if (c.out.empty()) {
        for (const auto& t : r.tables) {
            if (r.tables.size() > 1) out << "# " << t.name << "\n";
            out << t.toCsv();
        }
        return;
    }
    fs::create_directories(c.out);
    for (const auto& t : r.tables) writeFile(fs::path(c.out) / (t.name + ".csv"), t.toCsv());
}

std::optional<DateRange> rangeOf(const std::string& from, const std::string& to) {
    if (from.empty() && to.empty()) return std::nullopt;
    if (from.empty() || to.empty()) throw Error(ErrorCode::InvalidArgument, "--from and --to must be given together");
    return DateRange{parseWindow(from).from, parseWindow(to).to};
}

std::optional<double> capOf(const std::string& text) {
    if (text == "none") return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0') throw Error(ErrorCode::InvalidArgument, "--cap must be a number or 'none'", text);
    return v;
}

int serve(const std::optional<std::string>& config_file, const std::string& bind, const std::string& store,
          std::ostream& out) {
    auto cfg = service::loadServiceConfig(config_file ? std::optional<fs::path>(*config_file) : std::nullopt);
    if (!bind.empty()) cfg.bind = bind;
    if (!store.empty()) cfg.snapshot_dir = store;
    const Catalog catalog = loadCatalog(cfg.catalog_file);
    service::ApiService api(cfg, catalog);
    api.start();
    if (!cfg.trends_base_url.empty()) {
        api.startRefresher([&api, &catalog, url = cfg.trends_base_url] {
            ingest::ClientConfig client;
            client.base_url = url;
            const auto current = api.snapshot();
            return ingest::buildSnapshotFromSource(client, catalog, ingest::defaultAcquisitionPlan(),
                                                   current ? current->indicators : std::vector<IndicatorSeries>{},
                                                   utcTimestampNow());
        });
    }
    out << "serving on port " << api.port() << " snapshot " << api.snapshot()->content_hash << std::endl;
    g_stop = false;
    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    api.stop();
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"infoveil: search-trend surveillance pipeline"};
    app.name("infoveil");
    app.require_subcommand(1);

    std::function<int()> action;

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Build and commit a snapshot from fixtures or a Trends source");
    std::string fixtures_dir, source_url, catalog_file, unemployment_file, medicaid_file, created_at;
    std::string ingest_store = defaultStore();
    std::size_t parallelism = 4;
    auto* src_opt = ingest_cmd->add_option("--fixtures", fixtures_dir, "Fixture directory");
    ingest_cmd->add_option("--source", source_url, "Trends-compatible base URL")->excludes(src_opt);
    ingest_cmd->add_option("--store", ingest_store, "Snapshot store directory")->capture_default_str();
    ingest_cmd->add_option("--catalog", catalog_file, "Query catalog CSV (default: bundled)");
    ingest_cmd->add_option("--unemployment", unemployment_file, "Weekly claims CSV (week_ending,initial_claims)");
    ingest_cmd->add_option("--medicaid", medicaid_file, "Monthly applications CSV (month,new_applications)");
    ingest_cmd->add_option("--created-at", created_at, "Timestamp recorded in the snapshot (default: now)");
    ingest_cmd->add_option("--parallelism", parallelism, "Concurrent queries against the source")->capture_default_str();
    ingest_cmd->callback([&] {
        action = [&]() -> int {
            if (fixtures_dir.empty() && source_url.empty()) source_url = ingest::baseUrlFromEnv();
            if (fixtures_dir.empty() && source_url.empty()) {
                throw Error(ErrorCode::InvalidArgument, "ingest needs --fixtures or --source");
            }
            const Catalog catalog = loadCatalog(catalog_file.empty() ? std::nullopt : std::optional<fs::path>(catalog_file));
            const std::string stamp = created_at.empty() ? utcTimestampNow() : created_at;
            Snapshot s;
            if (!fixtures_dir.empty()) {
                s = ingest::buildSnapshotFromFixtures(fixtures_dir, catalog, stamp);
            } else {
                std::vector<IndicatorSeries> indicators;
                if (!unemployment_file.empty()) {
                    indicators.push_back(ingest::loadIndicatorCsv(unemployment_file, ingest::IndicatorSchema::UnemploymentWeekly));
                }
                if (!medicaid_file.empty()) {
                    indicators.push_back(ingest::loadIndicatorCsv(medicaid_file, ingest::IndicatorSchema::MedicaidMonthly));
                }
                ingest::ClientConfig cfg;
                cfg.base_url = source_url;
                s = ingest::buildSnapshotFromSource(cfg, catalog, ingest::defaultAcquisitionPlan(), std::move(indicators),
                                                    stamp, parallelism);
            }
            if (!fixtures_dir.empty()) {
                if (!unemployment_file.empty()) {
                    std::erase_if(s.indicators, [](const auto& i) { return i.name == ingest::kUnemploymentIndicator; });
                    s.indicators.push_back(ingest::loadIndicatorCsv(unemployment_file, ingest::IndicatorSchema::UnemploymentWeekly));
                }
                if (!medicaid_file.empty()) {
                    std::erase_if(s.indicators, [](const auto& i) { return i.name == ingest::kMedicaidIndicator; });
                    s.indicators.push_back(ingest::loadIndicatorCsv(medicaid_file, ingest::IndicatorSchema::MedicaidMonthly));
                }
                s.content_hash = computeContentHash(s);
            }
            out << SnapshotStore(ingest_store).commit(s) << "\n";
            return kExitOk;
        };
    });

    // catalog
    auto* catalog_cmd = app.add_subcommand("catalog", "Print the query catalog");
    Common catalog_common;
    std::string catalog_src;
    catalog_cmd->add_option("--catalog", catalog_src, "Catalog CSV (default: bundled)");
    catalog_cmd->add_option("--out", catalog_common.out, "Output directory (default: stdout)");
    catalog_cmd->add_option("--format", catalog_common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    catalog_cmd->callback([&] {
        action = [&] {
            const Catalog c = loadCatalog(catalog_src.empty() ? std::nullopt : std::optional<fs::path>(catalog_src));
            emit(catalog_common, "catalog", report::catalogReport(c), out);
            return kExitOk;
        };
    });

    // trends
    auto* trends_cmd = app.add_subcommand("trends", "Export one stored series");
    Common trends_common;
    trends_common.attach(trends_cmd);
    std::string trends_query, trends_geo = "US", trends_from, trends_to, trends_gran = "weekly";
    trends_cmd->add_option("--query", trends_query, "Query id")->required();
    trends_cmd->add_option("--geo", trends_geo, "US or a state code")->capture_default_str();
    trends_cmd->add_option("--from", trends_from, "Start (YYYY-MM or YYYY-MM-DD)");
    trends_cmd->add_option("--to", trends_to, "End (YYYY-MM or YYYY-MM-DD)");
    trends_cmd->add_option("--granularity", trends_gran, "daily, weekly or monthly")->capture_default_str();
    trends_cmd->callback([&] {
        action = [&] {
            emit(trends_common, "trends",
                 report::trendsReport(*trends_common.load(), trends_query, trends_geo, parseGranularity(trends_gran),
                                      rangeOf(trends_from, trends_to)),
                 out);
            return kExitOk;
        };
    });

    // panel
    auto* panel_cmd = app.add_subcommand("panel", "Export the state x query panel");
    Common panel_common;
    panel_common.attach(panel_cmd);
    std::string panel_from, panel_to;
    panel_cmd->add_option("--from", panel_from, "Aggregate weekly state series from this date");
    panel_cmd->add_option("--to", panel_to, "... up to this date");
    panel_cmd->callback([&] {
        action = [&] {
            emit(panel_common, "panel", report::panelReport(*panel_common.load(), rangeOf(panel_from, panel_to)), out);
            return kExitOk;
        };
    });

    // change
    auto* change_cmd = app.add_subcommand("change", "Percent change between two windows");
    Common change_common;
    change_common.attach(change_cmd);
    std::string change_from = "2020-01", change_to = "2020-03", change_cap = "10000";
    change_cmd->add_option("--from", change_from, "Baseline window")->capture_default_str();
    change_cmd->add_option("--to", change_to, "Comparison window")->capture_default_str();
    change_cmd->add_option("--cap", change_cap, "Cap in percent, or 'none'")->capture_default_str();
    change_cmd->callback([&] {
        action = [&] {
            emit(change_common, "change",
                 report::changeReport(*change_common.load(), parseWindow(change_from), parseWindow(change_to),
                                      capOf(change_cap)),
                 out);
            return kExitOk;
        };
    });

    // corr
    auto* corr_cmd = app.add_subcommand("corr", "Pairwise correlation of the window panel");
    Common corr_common;
    corr_common.attach(corr_cmd);
    bool keep_incomplete = false;
    corr_cmd->add_flag("--keep-incomplete", keep_incomplete, "Keep queries with missing states");
    corr_cmd->callback([&] {
        action = [&] {
            const auto r = report::correlationReport(*corr_common.load(), keep_incomplete);
            const auto& dropped = r.data["dropped"];
            if (corr_common.format == "csv") {
                out << "# dropped " << dropped.size() << " queries with missing states";
                for (const auto& d : dropped) out << (&d == &dropped.front() ? ": " : ", ") << d.get<std::string>();
                out << "\n";
            }
            emit(corr_common, "correlation", r, out);
            return kExitOk;
        };
    });

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "Principal components of the window panel");
    Common pca_common;
    pca_common.attach(pca_cmd);
    report::PcaParams pca_params;
    pca_cmd->add_option("--k", pca_params.k, "Components to retain")->capture_default_str();
    pca_cmd->add_option("--threshold", pca_params.threshold, "Salient loading threshold")->capture_default_str();
    pca_cmd->add_option("--n-top", pca_params.n_top, "Top states per component")->capture_default_str();
    pca_cmd->callback([&] {
        action = [&] {
            emit(pca_common, "pca", report::pcaReport(*pca_common.load(), pca_params), out);
            return kExitOk;
        };
    });

    // interpret
    auto* interp_cmd = app.add_subcommand("interpret", "Salient queries and top states of one component");
    Common interp_common;
    interp_common.attach(interp_cmd);
    report::PcaParams interp_params;
    std::size_t component = 1;
    interp_cmd->add_option("--component", component, "1-based component")->capture_default_str();
    interp_cmd->add_option("--k", interp_params.k, "Components to retain")->capture_default_str();
    interp_cmd->add_option("--threshold", interp_params.threshold, "Salient loading threshold")->capture_default_str();
    interp_cmd->add_option("--n-top", interp_params.n_top, "Top states")->capture_default_str();
    interp_cmd->callback([&] {
        action = [&] {
            emit(interp_common, "interpret",
                 report::interpretReport(*interp_common.load(), interp_params.k, component, interp_params.threshold,
                                         interp_params.n_top),
                 out);
            return kExitOk;
        };
    });

    // choropleth
    auto* choro_cmd = app.add_subcommand("choropleth", "Per-state values of one query");
    Common choro_common;
    choro_common.attach(choro_cmd);
    std::string choro_query, choro_from, choro_to;
    choro_cmd->add_option("--query", choro_query, "Query id")->required();
    choro_cmd->add_option("--from", choro_from, "Aggregate weekly state series from this date");
    choro_cmd->add_option("--to", choro_to, "... up to this date");
    choro_cmd->callback([&] {
        action = [&] {
            emit(choro_common, "choropleth",
                 report::choroplethReport(*choro_common.load(), choro_query, rangeOf(choro_from, choro_to)), out);
            return kExitOk;
        };
    });

    // leadlag
    auto* ll_cmd = app.add_subcommand("leadlag", "Lagged correlation against an indicator");
    Common ll_common;
    ll_common.attach(ll_cmd);
    report::LeadLagParams ll;
    ll.indicator = ingest::kUnemploymentIndicator;
    std::optional<int> ll_lag;
    std::string ll_baseline;
    ll_cmd->add_option("--query", ll.query_id, "Query id")->required();
    ll_cmd->add_option("--indicator", ll.indicator, "Indicator name")->capture_default_str();
    ll_cmd->add_option("--lag", ll_lag, "Single lag (periods; positive: query leads)");
    ll_cmd->add_option("--lag-min", ll.lag_min, "Smallest lag")->capture_default_str();
    ll_cmd->add_option("--lag-max", ll.lag_max, "Largest lag")->capture_default_str();
    ll_cmd->add_option("--adjust-baseline", ll_baseline, "Seasonally adjust the indicator against FROM/TO");
    ll_cmd->callback([&] {
        action = [&] {
            ll.lag = ll_lag;
            if (!ll_baseline.empty()) ll.adjust_baseline = parseWindow(ll_baseline);
            emit(ll_common, "leadlag", report::leadlagReport(*ll_common.load(), ll), out);
            return kExitOk;
        };
    });

    // leadtime
    auto* lt_cmd = app.add_subcommand("leadtime", "Days between threshold crossing and each policy event");
    Common lt_common;
    lt_common.attach(lt_cmd);
    std::string lt_query, lt_gran;
    int lt_threshold = leadlag::kDefaultLeadThreshold;
    lt_cmd->add_option("--query", lt_query, "Query id")->required();
    lt_cmd->add_option("--threshold", lt_threshold, "RSV threshold")->capture_default_str();
    lt_cmd->add_option("--granularity", lt_gran, "Series granularity (default: daily when stored)");
    lt_cmd->callback([&] {
        action = [&] {
            std::optional<Granularity> g;
            if (!lt_gran.empty()) g = parseGranularity(lt_gran);
            emit(lt_common, "leadtime", report::leadtimeReport(*lt_common.load(), lt_query, lt_threshold, g), out);
            return kExitOk;
        };
    });

    // alerts
    auto* alerts_cmd = app.add_subcommand("alerts", "Evaluate a watchlist file against a snapshot");
    Common alerts_common;
    alerts_common.attach(alerts_cmd);
    std::string watchlist_file;
    alerts_cmd->add_option("--watchlist", watchlist_file, "Watchlist JSON")->required();
    alerts_cmd->callback([&] {
        action = [&] {
            const auto snap = alerts_common.load();
            const json doc = json::parse(readFile(watchlist_file), nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::InvalidArgument, "watchlist is not a JSON object");
            alerts::Watchlist wl{alerts::entriesFromJson(doc.value("entries", json::array())), doc.value("version", 0ULL)};
            report::Report r;
            r.tables.push_back({"alerts", {"query_id", "geo", "rule", "trigger_date", "observed"}, {}});
            json list = json::array();
            for (const auto& a : alerts::evaluateAlerts(*snap, wl)) {
                list.push_back(alerts::toJson(a));
                r.tables[0].rows.push_back({a.query_id, a.geo, alerts::describe(a.rule), formatDate(a.trigger_date),
                                            report::formatNumber(a.observed)});
            }
            r.data = {{"watchlist_version", wl.version}, {"alerts", std::move(list)}};
            emit(alerts_common, "alerts", r, out);
            return kExitOk;
        };
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API over the snapshot store");
    std::optional<std::string> serve_config;
    std::string serve_bind, serve_store;
    serve_cmd->add_option("--config", serve_config, "JSON config file");
    serve_cmd->add_option("--bind", serve_bind, "host:port (overrides config and environment)");
    serve_cmd->add_option("--store", serve_store, "Snapshot store (overrides config and environment)");
    serve_cmd->callback([&] { action = [&] { return serve(serve_config, serve_bind, serve_store, out); }; });

    // fixtures gen
    auto* fixtures_cmd = app.add_subcommand("fixtures", "Planted-ground-truth fixture generators");
    fixtures_cmd->require_subcommand(1);
    auto* gen_cmd = fixtures_cmd->add_subcommand("gen", "Write the reference fixture directory");
    std::uint64_t seed = 20200416;
    std::string gen_out;
    std::string gen_commit;
    gen_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen_out, "Fixture directory to write")->required();
    gen_cmd->add_option("--commit", gen_commit, "Also commit the snapshot into this store");
    gen_cmd->callback([&] {
        action = [&] {
            const auto snap = fixtures::referenceSnapshot(loadCatalog(), seed);
            fixtures::writeFixtureDirectory(snap, gen_out);
            if (!gen_commit.empty()) {
                out << SnapshotStore(gen_commit).commit(snap) << "\n";
            } else {
                out << snap.content_hash << "\n";
            }
            return kExitOk;
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const Error& e) {
        err << "error [" << toString(e.code()) << "]: " << e.what();
        if (!e.detail().empty() && e.detail() != e.what()) err << " (" << e.detail() << ")";
        err << "\n";
        return exitCodeFor(e.code());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace infoveil::cli
