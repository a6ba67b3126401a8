#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "infoveil/series.hpp"

namespace httplib {
class Server;
}

namespace infoveil::ingest {

/// In-process server speaking the Trends wire contract. Holds raw search
/// shares and quantizes them over each requested window, so every response
/// is normalised the way the live service normalises.
class MockTrendsServer {
public:
    struct LoggedRequest {
        std::chrono::steady_clock::time_point at;
        std::string path;
        int status = 0;
    };

    struct ScriptedResponse {
        int status = 200;
        /// Replaces the computed body when set (e.g. a truncated document).
        std::optional<std::string> body;
    };

    MockTrendsServer();
    ~MockTrendsServer();
    MockTrendsServer(const MockTrendsServer&) = delete;
    MockTrendsServer& operator=(const MockTrendsServer&) = delete;

    /// Binds 127.0.0.1 on an ephemeral port and starts serving.
    void start();
    void stop();
    int port() const { return port_; }
    std::string baseUrl() const;

    /// Shares keyed by date; `canonical_query` is QueryExpr::canonicalText().
    void setTimeShares(const std::string& canonical_query, const std::string& geo, Granularity granularity,
                       std::vector<TimePoint> shares);
    /// nullopt marks a state the source omits.
    void setStateShares(const std::string& canonical_query, std::map<std::string, std::optional<double>> shares);

    /// Responses consumed in order before normal handling resumes.
    void script(std::vector<ScriptedResponse> responses);

    std::vector<LoggedRequest> requestLog() const;

private:
    void installRoutes();

    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<TimePoint>> time_shares_;
    std::map<std::string, std::map<std::string, std::optional<double>>> state_shares_;
    std::vector<ScriptedResponse> script_;
    std::vector<LoggedRequest> log_;
};

}  // namespace infoveil::ingest
