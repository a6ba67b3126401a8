#include "infoveil/service.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "infoveil/error.hpp"
#include "infoveil/ingest.hpp"
#include "infoveil/report.hpp"

namespace infoveil::service {

using nlohmann::json;

ServiceConfig loadServiceConfig(const std::optional<std::filesystem::path>& file) {
    ServiceConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorCode::NotFound, "config file " + file->string() + " not found", file->string());
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            const json j = json::parse(buf.str());
            if (j.contains("bind")) cfg.bind = j["bind"].get<std::string>();
            if (j.contains("snapshot_dir")) cfg.snapshot_dir = j["snapshot_dir"].get<std::string>();
            if (j.contains("trends_base_url")) cfg.trends_base_url = j["trends_base_url"].get<std::string>();
            if (j.contains("refresh_hours")) cfg.refresh_hours = j["refresh_hours"].get<double>();
            if (j.contains("catalog_file")) cfg.catalog_file = j["catalog_file"].get<std::string>();
            if (j.contains("watchlist_file")) cfg.watchlist_file = j["watchlist_file"].get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "config file " + file->string() + " is malformed", e.what());
        }
    }
    if (const char* v = std::getenv("INFOVEIL_BIND"); v && *v) cfg.bind = v;
    if (const char* v = std::getenv("INFOVEIL_SNAPSHOT_DIR"); v && *v) cfg.snapshot_dir = v;
    if (const char* v = std::getenv("INFOVEIL_TRENDS_BASE_URL"); v && *v) cfg.trends_base_url = v;
    if (const char* v = std::getenv("INFOVEIL_REFRESH_HOURS"); v && *v) {
        char* end = nullptr;
        const double h = std::strtod(v, &end);
        if (end == v || *end != '\0' || !(h > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "INFOVEIL_REFRESH_HOURS must be a positive number", v);
        }
        cfg.refresh_hours = h;
    }
    return cfg;
}

int httpStatusFor(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::UnknownGeography:
            return 404;
        case ErrorCode::VersionConflict:
            return 409;
        case ErrorCode::InvalidArgument:
        case ErrorCode::EmptyExpression:
        case ErrorCode::TooManyTerms:
        case ErrorCode::DuplicateTerm:
        case ErrorCode::OutOfRange:
        case ErrorCode::BadIndex:
        case ErrorCode::KTooLarge:
        case ErrorCode::InvariantViolation:
            return 400;
        case ErrorCode::EmptyPanel:
        case ErrorCode::EmptyWindow:
        case ErrorCode::AllQueriesDropped:
        case ErrorCode::ConstantColumn:
        case ErrorCode::TooShort:
        case ErrorCode::InsufficientBaseline:
        case ErrorCode::InsufficientOverlap:
        case ErrorCode::ConstantSeries:
        case ErrorCode::NoValidLag:
        case ErrorCode::EmptySeries:
            return 422;
        case ErrorCode::StoreUnavailable:
        case ErrorCode::SourceUnavailable:
        case ErrorCode::RateLimited:
            return 503;
        default:
            return 500;
    }
}

namespace {

json errorBody(std::string_view code, const std::string& message, const std::string& detail) {
    return {{"code", code}, {"message", message}, {"detail", detail}};
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

std::string requireParam(const httplib::Request& req, const char* name) {
    auto v = param(req, name);
    if (!v || v->empty()) {
        throw Error(ErrorCode::InvalidArgument, std::string("missing query parameter '") + name + "'", name);
    }
    return *v;
}

template <typename T>
T parseNumber(const std::string& text, const char* name) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::InvalidArgument, std::string("parameter '") + name + "' is not a number", text);
    }
    return value;
}

double parseReal(const std::string& text, const char* name) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0') {
        throw Error(ErrorCode::InvalidArgument, std::string("parameter '") + name + "' is not a number", text);
    }
    return v;
}

template <typename T>
T numberParam(const httplib::Request& req, const char* name, T fallback) {
    const auto v = param(req, name);
    if (!v) return fallback;
    if constexpr (std::is_floating_point_v<T>) {
        return parseReal(*v, name);
    } else {
        return parseNumber<T>(*v, name);
    }
}

/// from/to pair into an optional range; both or neither.
std::optional<DateRange> rangeParams(const httplib::Request& req) {
    const auto from = param(req, "from");
    const auto to = param(req, "to");
    if (!from && !to) return std::nullopt;
    if (!from || !to) throw Error(ErrorCode::InvalidArgument, "'from' and 'to' must be given together");
    const DateRange a = parseWindow(*from);
    const DateRange b = parseWindow(*to);
    return DateRange{a.from, b.to};
}

}  // namespace

ApiService::ApiService(ServiceConfig config, Catalog catalog)
    : config_(std::move(config)), catalog_(std::move(catalog)), store_(config_.snapshot_dir) {
    const auto wl = config_.watchlist_file.value_or(config_.snapshot_dir / "watchlist.json");
    watchlist_ = std::make_unique<alerts::WatchlistStore>(wl, catalog_);
    server_ = std::make_unique<httplib::Server>();
    // httplib's default adds SO_REUSEPORT, which would let a second instance share the port silently.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    installRoutes();
}

ApiService::~ApiService() { stop(); }

void ApiService::start() {
    try {
        snapshot_ = store_.loadLatest();
    } catch (const Error& e) {
        throw Error(ErrorCode::StoreUnavailable, "no usable snapshot in " + config_.snapshot_dir.string(), e.what());
    }

    const auto colon = config_.bind.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BindFailure, "bind address must be host:port", config_.bind);
    const std::string host = config_.bind.substr(0, colon);
    int port = 0;
    try {
        port = parseNumber<int>(config_.bind.substr(colon + 1), "bind");
    } catch (const Error&) {
        throw Error(ErrorCode::BindFailure, "bad port in bind address", config_.bind);
    }
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ <= 0) throw Error(ErrorCode::BindFailure, "cannot bind " + config_.bind, config_.bind);
    } else {
        if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::BindFailure, "cannot bind " + config_.bind, config_.bind);
        port_ = port;
    }
    {
        std::lock_guard lock(refresh_mutex_);
        stopping_ = false;
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ApiService::stop() {
    {
        std::lock_guard lock(refresh_mutex_);
        stopping_ = true;
    }
    refresh_cv_.notify_all();
    if (server_) server_->stop();  // the listener joins its worker pool, draining in-flight requests
    if (server_thread_.joinable()) server_thread_.join();
    if (refresher_.joinable()) refresher_.join();
}

void ApiService::wait() {
    std::unique_lock lock(refresh_mutex_);
    refresh_cv_.wait(lock, [this] { return stopping_; });
}

bool ApiService::reload() {
    const auto hash = store_.latestHash();
    if (!hash) return false;
    {
        std::lock_guard lock(snapshot_mutex_);
        if (snapshot_ && snapshot_->content_hash == *hash) return false;
    }
    auto next = store_.load(*hash);
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
    return true;
}

std::shared_ptr<const Snapshot> ApiService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void ApiService::startRefresher(Ingestor ingest) {
    const auto period = std::chrono::duration<double, std::ratio<3600>>(config_.refresh_hours);
    refresher_ = std::thread([this, ingest = std::move(ingest), period] {
        std::unique_lock lock(refresh_mutex_);
        while (!refresh_cv_.wait_for(lock, period, [this] { return stopping_; })) {
            lock.unlock();
            try {
                store_.commit(ingest());
                reload();
            } catch (const std::exception& e) {
                std::cerr << "refresh failed: " << e.what() << "\n";  // keep serving the previous snapshot
            }
            lock.lock();
        }
    });
}

void ApiService::installRoutes() {
    using Handler = std::function<json(const Snapshot&, const httplib::Request&)>;

    const auto send = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    const auto guarded = [send](httplib::Response& res, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send(res, httpStatusFor(e.code()), errorBody(toString(e.code()), e.what(), e.detail()));
        } catch (const std::exception& e) {
            send(res, 500, errorBody("Internal", e.what(), ""));
        }
    };
    const auto read = [this, send, guarded](Handler fn) {
        return [this, send, guarded, fn](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto snap = snapshot();
                if (!snap) throw Error(ErrorCode::StoreUnavailable, "no snapshot loaded");
                send(res, 200, json{{"snapshot", snap->content_hash}, {"data", fn(*snap, req)}});
            });
        };
    };

    auto& s = *server_;
    s.Get("/api/v1/catalog", read([this](const Snapshot&, const httplib::Request&) {
        return report::catalogReport(catalog_).data;
    }));
    s.Get("/api/v1/trends", read([](const Snapshot& snap, const httplib::Request& req) {
        const auto gran = param(req, "granularity").value_or("weekly");
        return report::trendsReport(snap, requireParam(req, "query"), param(req, "geo").value_or("US"),
                                    parseGranularity(gran), rangeParams(req))
            .data;
    }));
    s.Get("/api/v1/panel", read([](const Snapshot& snap, const httplib::Request& req) {
        return report::panelReport(snap, rangeParams(req)).data;
    }));
    s.Get("/api/v1/change", read([](const Snapshot& snap, const httplib::Request& req) {
        const DateRange from = parseWindow(param(req, "from_window").value_or("2020-01"));
        const DateRange to = parseWindow(param(req, "to_window").value_or("2020-03"));
        std::optional<double> cap = report::kDefaultChangeCap;
        if (const auto c = param(req, "cap")) cap = (*c == "none") ? std::nullopt : std::optional(parseReal(*c, "cap"));
        return report::changeReport(snap, from, to, cap).data;
    }));
    s.Get("/api/v1/correlation", read([](const Snapshot& snap, const httplib::Request& req) {
        return report::correlationReport(snap, param(req, "keep_incomplete").value_or("false") == "true").data;
    }));
    s.Get("/api/v1/pca", read([](const Snapshot& snap, const httplib::Request& req) {
        report::PcaParams p;
        p.k = numberParam<std::size_t>(req, "k", p.k);
        p.threshold = numberParam<double>(req, "threshold", p.threshold);
        p.n_top = numberParam<std::size_t>(req, "n_top", p.n_top);
        return report::pcaReport(snap, p).data;
    }));
    s.Get(R"(/api/v1/pca/(\d+)/interpret)", read([](const Snapshot& snap, const httplib::Request& req) {
        const auto component = parseNumber<std::size_t>(req.matches[1].str(), "component");
        report::PcaParams p;
        p.k = numberParam<std::size_t>(req, "k", p.k);
        return report::interpretReport(snap, p.k, component, numberParam<double>(req, "threshold", p.threshold),
                                       numberParam<std::size_t>(req, "n_top", p.n_top))
            .data;
    }));
    s.Get("/api/v1/choropleth", read([](const Snapshot& snap, const httplib::Request& req) {
        return report::choroplethReport(snap, requireParam(req, "query"), rangeParams(req)).data;
    }));
    s.Get("/api/v1/leadlag", read([](const Snapshot& snap, const httplib::Request& req) {
        report::LeadLagParams p;
        p.query_id = requireParam(req, "query");
        p.indicator = param(req, "indicator").value_or(ingest::kUnemploymentIndicator);
        if (const auto lag = param(req, "lag")) p.lag = parseNumber<int>(*lag, "lag");
        p.lag_min = numberParam<int>(req, "lag_min", p.lag_min);
        p.lag_max = numberParam<int>(req, "lag_max", p.lag_max);
        if (const auto b = param(req, "adjust_baseline")) p.adjust_baseline = parseWindow(*b);
        return report::leadlagReport(snap, p).data;
    }));
    s.Get("/api/v1/events/leadtime", read([](const Snapshot& snap, const httplib::Request& req) {
        std::optional<Granularity> gran;
        if (const auto g = param(req, "granularity")) gran = parseGranularity(*g);
        return report::leadtimeReport(snap, requireParam(req, "query"),
                                      numberParam<int>(req, "threshold", leadlag::kDefaultLeadThreshold), gran)
            .data;
    }));
    s.Get("/api/v1/alerts", read([this](const Snapshot& snap, const httplib::Request&) {
        const auto wl = watchlist_->current();
        json list = json::array();
        for (const auto& a : alerts::evaluateAlerts(snap, wl)) list.push_back(alerts::toJson(a));
        return json{{"watchlist_version", wl.version}, {"alerts", std::move(list)}};
    }));
    s.Get("/api/v1/watchlist", read([this](const Snapshot&, const httplib::Request&) {
        return alerts::toJson(watchlist_->current());
    }));
    s.Put("/api/v1/watchlist", [this, send, guarded](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::InvalidArgument, "request body is not JSON", e.what());
            }
            if (!body.is_object() || !body.contains("version") || !body["version"].is_number_unsigned()) {
                throw Error(ErrorCode::InvalidArgument, "body needs an unsigned 'version'");
            }
            const auto updated = watchlist_->replace(alerts::entriesFromJson(body.value("entries", json::array())),
                                                     body["version"].get<std::uint64_t>());
            const auto snap = snapshot();
            send(res, 200, json{{"snapshot", snap ? json(snap->content_hash) : json(nullptr)},
                                {"data", alerts::toJson(updated)}});
        });
    });
    s.set_error_handler([send](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) {
            send(res, 404, errorBody("NotFound", "no such endpoint", req.path));
        }
    });
}

}  // namespace infoveil::service
