#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "infoveil/alerts.hpp"
#include "infoveil/error.hpp"
#include "infoveil/query.hpp"
#include "infoveil/snapshot.hpp"

namespace httplib {
class Server;
}

namespace infoveil::service {

struct ServiceConfig {
    std::string bind = "127.0.0.1:8080";  // host:port; port 0 picks a free port
    std::filesystem::path snapshot_dir = "snapshots";
    std::string trends_base_url;
    double refresh_hours = 24.0;
    std::optional<std::filesystem::path> catalog_file;
    std::optional<std::filesystem::path> watchlist_file;  // default <snapshot_dir>/watchlist.json
};

/// JSON config file (optional) then INFOVEIL_BIND, INFOVEIL_SNAPSHOT_DIR,
/// INFOVEIL_TRENDS_BASE_URL and INFOVEIL_REFRESH_HOURS overrides.
ServiceConfig loadServiceConfig(const std::optional<std::filesystem::path>& file);

/// Maps an error code onto the HTTP status used in error bodies.
int httpStatusFor(ErrorCode code);

/// HTTP API over the latest committed snapshot. Every read response is
/// `{"snapshot": <hash>, "data": ...}`; errors are `{code, message, detail}`.
class ApiService {
public:
    /// Produces a fresh snapshot for the background refresher.
    using Ingestor = std::function<Snapshot()>;

    ApiService(ServiceConfig config, Catalog catalog);
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Loads the latest snapshot and binds. Throws StoreUnavailable, BindFailure.
    void start();
    /// Stops accepting, drains in-flight requests, joins workers.
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    int port() const { return port_; }

    /// Re-reads LATEST and swaps the served snapshot when it changed.
    bool reload();
    std::shared_ptr<const Snapshot> snapshot() const;

    /// Runs `ingest` every refresh_hours, committing and swapping the result.
    void startRefresher(Ingestor ingest);

private:
    void installRoutes();

    ServiceConfig config_;
    Catalog catalog_;
    SnapshotStore store_;
    std::unique_ptr<alerts::WatchlistStore> watchlist_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    int port_ = 0;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;

    std::thread refresher_;
    std::mutex refresh_mutex_;
    std::condition_variable refresh_cv_;
    bool stopping_ = false;
};

}  // namespace infoveil::service
