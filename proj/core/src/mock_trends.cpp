#include "infoveil/mock_trends.hpp"

#include <httplib.h>
#include <json.hpp>

#include "infoveil/error.hpp"
#include "infoveil/rsv.hpp"

namespace infoveil::ingest {

using nlohmann::json;

namespace {

std::string timeKey(const std::string& q, const std::string& geo, Granularity g) {
    return q + "\x1f" + geo + "\x1f" + std::string(toString(g));
}

void sendError(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

MockTrendsServer::MockTrendsServer() : server_(std::make_unique<httplib::Server>()) { installRoutes(); }

MockTrendsServer::~MockTrendsServer() { stop(); }

void MockTrendsServer::start() {
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(ErrorCode::BindFailure, "mock trends server could not bind");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void MockTrendsServer::stop() {
    if (thread_.joinable()) {
        server_->stop();
        thread_.join();
    }
}

std::string MockTrendsServer::baseUrl() const { return "http://127.0.0.1:" + std::to_string(port_); }

void MockTrendsServer::setTimeShares(const std::string& canonical_query, const std::string& geo,
                                     Granularity granularity, std::vector<TimePoint> shares) {
    std::lock_guard lock(mutex_);
    time_shares_[timeKey(canonical_query, geo, granularity)] = std::move(shares);
}

void MockTrendsServer::setStateShares(const std::string& canonical_query,
                                      std::map<std::string, std::optional<double>> shares) {
    std::lock_guard lock(mutex_);
    state_shares_[canonical_query] = std::move(shares);
}

void MockTrendsServer::script(std::vector<ScriptedResponse> responses) {
    std::lock_guard lock(mutex_);
    script_.insert(script_.end(), responses.begin(), responses.end());
}

std::vector<MockTrendsServer::LoggedRequest> MockTrendsServer::requestLog() const {
    std::lock_guard lock(mutex_);
    return log_;
}

void MockTrendsServer::installRoutes() {
    // Returns true when a scripted response was sent.
    const auto scripted = [this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mutex_);
        if (script_.empty()) return false;
        const ScriptedResponse r = script_.front();
        script_.erase(script_.begin());
        res.status = r.status;
        res.set_content(r.body.value_or(json{{"error", "scripted"}}.dump()), "application/json");
        log_.push_back({std::chrono::steady_clock::now(), req.path, r.status});
        return true;
    };
    const auto record = [this](const httplib::Request& req, int status) {
        std::lock_guard lock(mutex_);
        log_.push_back({std::chrono::steady_clock::now(), req.path, status});
    };

    server_->Get("/trends/over_time", [this, scripted, record](const httplib::Request& req, httplib::Response& res) {
        if (scripted(req, res)) return;
        try {
            const DateRange window{parseDate(req.get_param_value("from")), parseDate(req.get_param_value("to"))};
            const Granularity g = parseGranularity(req.has_param("gran") ? req.get_param_value("gran") : "weekly");
            std::vector<TimePoint> shares;
            {
                std::lock_guard lock(mutex_);
                const auto it = time_shares_.find(timeKey(req.get_param_value("q"), req.get_param_value("geo"), g));
                if (it != time_shares_.end()) shares = it->second;
            }
            rsv::RawSharePanel panel{rsv::Axis::TimeWithinGeo, {}};
            for (const auto& p : shares) {
                if (window.contains(p.date)) panel.entries.push_back({formatDate(p.date), p.value, 1.0});
            }
            json points = json::array();
            if (!panel.entries.empty()) {
                for (const auto& q : rsv::quantizeRsv(panel)) points.push_back({{"date", q.key}, {"value", q.rsv}});
            }
            res.set_content(json{{"points", std::move(points)}}.dump(), "application/json");
            record(req, 200);
        } catch (const std::exception& e) {
            sendError(res, 400, e.what());
            record(req, 400);
        }
    });

    server_->Get("/trends/by_state", [this, scripted, record](const httplib::Request& req, httplib::Response& res) {
        if (scripted(req, res)) return;
        std::map<std::string, std::optional<double>> shares;
        {
            std::lock_guard lock(mutex_);
            const auto it = state_shares_.find(req.get_param_value("q"));
            if (it != state_shares_.end()) shares = it->second;
        }
        rsv::RawSharePanel panel{rsv::Axis::GeoWithinWindow, {}};
        for (const auto& [geo, share] : shares) {
            if (share) panel.entries.push_back({geo, *share, 1.0});
        }
        std::map<std::string, int> quantized;
        if (!panel.entries.empty()) {
            for (const auto& q : rsv::quantizeRsv(panel)) quantized[q.key] = q.rsv;
        }
        json states = json::array();
        for (const auto& [geo, share] : shares) {
            states.push_back({{"geo", geo}, {"value", share ? json(quantized[geo]) : json(nullptr)}});
        }
        res.set_content(json{{"states", std::move(states)}}.dump(), "application/json");
        record(req, 200);
    });
}

}  // namespace infoveil::ingest
