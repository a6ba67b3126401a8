#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "infoveil/leadlag.hpp"
#include "infoveil/series.hpp"

namespace infoveil {

/// One acquisition run: the national weekly set, the state weekly set, the
/// state window panel, indicators and event anchors. Immutable once saved.
struct Snapshot {
    std::string created_at;
    std::string catalog_version;
    std::vector<RsvSeries> national;
    std::vector<RsvSeries> state_weekly;
    StatePanel state_window;
    std::vector<IndicatorSeries> indicators;
    std::vector<leadlag::PolicyEvent> events;
    std::string content_hash;

    /// Lookup by (query, geo, granularity); national for "US", otherwise state_weekly.
    const RsvSeries* findSeries(std::string_view query_id, std::string_view geo,
                                Granularity granularity = Granularity::Weekly) const;
    const IndicatorSeries* findIndicator(std::string_view name) const;

    bool operator==(const Snapshot&) const = default;
};

/// Canonical payload: fixed key order, integers for RSVs, shortest
/// round-trip text for reals. Excludes content_hash.
std::string canonicalPayload(const Snapshot& snapshot);
/// Lowercase hex SHA-256 of canonicalPayload().
std::string computeContentHash(const Snapshot& snapshot);
std::string sha256Hex(std::string_view bytes);

/// Parses a stored snapshot document and verifies its hash. Throws CorruptSnapshot.
Snapshot parseSnapshot(std::string_view text);

/// Writes `<store>/<hash>.json` through a temp file and rename. Returns the hash.
std::string saveSnapshot(const Snapshot& snapshot, const std::filesystem::path& store);
/// Throws NotFound or CorruptSnapshot.
Snapshot loadSnapshot(const std::filesystem::path& store, std::string_view hash);

/// Directory-backed store with a LATEST pointer. Readers may run
/// concurrently; commits are serialised inside the process and the pointer
/// swap is an atomic rename.
class SnapshotStore {
public:
    explicit SnapshotStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Saves, then points LATEST at it. Returns the hash.
    std::string commit(const Snapshot& snapshot);
    std::optional<std::string> latestHash() const;
    /// Throws NotFound when nothing has been committed.
    std::shared_ptr<const Snapshot> loadLatest() const;
    std::shared_ptr<const Snapshot> load(std::string_view hash) const;

private:
    std::filesystem::path root_;
    mutable std::mutex write_mutex_;
};

}  // namespace infoveil
