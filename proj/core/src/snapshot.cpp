#include "infoveil/snapshot.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "infoveil/error.hpp"

namespace infoveil {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "infoveil-snapshot/1";
constexpr const char* kLatestFile = "LATEST";

json seriesToJson(const RsvSeries& s) {
    json points = json::array();
    for (const auto& p : s.points) points.push_back(json::array({formatDate(p.date), p.value}));
    return {{"query_id", s.query_id},
            {"geo", s.geo},
            {"granularity", toString(s.granularity)},
            {"pulled_at", s.pulled_at},
            {"points", std::move(points)}};
}

RsvSeries seriesFromJson(const json& j) {
    RsvSeries s;
    s.query_id = j.at("query_id").get<std::string>();
    s.geo = j.at("geo").get<std::string>();
    s.granularity = parseGranularity(j.at("granularity").get<std::string>());
    s.pulled_at = j.at("pulled_at").get<std::string>();
    for (const auto& p : j.at("points")) s.points.push_back({parseDate(p.at(0).get<std::string>()), p.at(1).get<int>()});
    return s;
}

json panelToJson(const StatePanel& p) {
    json values = json::array();
    for (std::size_t s = 0; s < p.stateCount(); ++s) {
        json row = json::array();
        for (std::size_t q = 0; q < p.queryCount(); ++q) {
            const auto& v = p.at(s, q);
            row.push_back(v ? json(*v) : json(nullptr));
        }
        values.push_back(std::move(row));
    }
    return {{"window", formatWindow(p.window())}, {"states", p.states()}, {"query_ids", p.queryIds()},
            {"values", std::move(values)}};
}

StatePanel panelFromJson(const json& j) {
    StatePanel p(j.at("states").get<std::vector<std::string>>(), j.at("query_ids").get<std::vector<std::string>>(),
                 parseWindow(j.at("window").get<std::string>()));
    const auto& values = j.at("values");
    if (values.size() != p.stateCount()) throw Error(ErrorCode::CorruptSnapshot, "panel row count mismatch");
    for (std::size_t s = 0; s < p.stateCount(); ++s) {
        if (values[s].size() != p.queryCount()) throw Error(ErrorCode::CorruptSnapshot, "panel column count mismatch");
        for (std::size_t q = 0; q < p.queryCount(); ++q) {
            const auto& v = values[s][q];
            p.set(s, q, v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
    }
    return p;
}

json payloadJson(const Snapshot& s) {
    json national = json::array();
    for (const auto& x : s.national) national.push_back(seriesToJson(x));
    json state_weekly = json::array();
    for (const auto& x : s.state_weekly) state_weekly.push_back(seriesToJson(x));
    json indicators = json::array();
    for (const auto& ind : s.indicators) {
        json points = json::array();
        for (const auto& p : ind.points) points.push_back(json::array({formatDate(p.date), p.value}));
        indicators.push_back(
            {{"name", ind.name}, {"granularity", toString(ind.granularity)}, {"points", std::move(points)}});
    }
    json events = json::array();
    for (const auto& e : s.events) events.push_back({{"name", e.name}, {"date", formatDate(e.date)}});
    return {{"created_at", s.created_at},
            {"catalog_version", s.catalog_version},
            {"national", std::move(national)},
            {"state_weekly", std::move(state_weekly)},
            {"state_window", panelToJson(s.state_window)},
            {"indicators", std::move(indicators)},
            {"events", std::move(events)}};
}

Snapshot snapshotFromPayload(const json& j) {
    Snapshot s;
    s.created_at = j.at("created_at").get<std::string>();
    s.catalog_version = j.at("catalog_version").get<std::string>();
    for (const auto& x : j.at("national")) s.national.push_back(seriesFromJson(x));
    for (const auto& x : j.at("state_weekly")) s.state_weekly.push_back(seriesFromJson(x));
    s.state_window = panelFromJson(j.at("state_window"));
    for (const auto& x : j.at("indicators")) {
        IndicatorSeries ind;
        ind.name = x.at("name").get<std::string>();
        ind.granularity = parseGranularity(x.at("granularity").get<std::string>());
        for (const auto& p : x.at("points")) ind.points.push_back({parseDate(p.at(0).get<std::string>()), p.at(1).get<double>()});
        s.indicators.push_back(std::move(ind));
    }
    for (const auto& e : j.at("events")) {
        s.events.push_back({e.at("name").get<std::string>(), parseDate(e.at("date").get<std::string>())});
    }
    return s;
}

std::string readFile(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string(), path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void writeFileAtomic(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string(), tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string(), tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename into " + path.string() + ": " + ec.message(), path.string());
}

bool isHexHash(std::string_view h) {
    if (h.size() != 64) return false;
    for (char c : h) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

}  // namespace

const RsvSeries* Snapshot::findSeries(std::string_view query_id, std::string_view geo, Granularity granularity) const {
    const auto& set = geo == "US" ? national : state_weekly;
    for (const auto& s : set) {
        if (s.query_id == query_id && s.geo == geo && s.granularity == granularity) return &s;
    }
    return nullptr;
}

const IndicatorSeries* Snapshot::findIndicator(std::string_view name) const {
    for (const auto& i : indicators) {
        if (i.name == name) return &i;
    }
    return nullptr;
}

std::string canonicalPayload(const Snapshot& snapshot) { return payloadJson(snapshot).dump(); }

std::string sha256Hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string computeContentHash(const Snapshot& snapshot) { return sha256Hex(canonicalPayload(snapshot)); }

Snapshot parseSnapshot(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptSnapshot, std::string("snapshot is not valid JSON: ") + e.what());
    }
    Snapshot s;
    std::string stored;
    try {
        if (doc.at("format").get<std::string>() != kFormat) {
            throw Error(ErrorCode::CorruptSnapshot, "unsupported snapshot format");
        }
        stored = doc.at("content_hash").get<std::string>();
        s = snapshotFromPayload(doc.at("payload"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptSnapshot, std::string("snapshot structure invalid: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptSnapshot) throw;
        throw Error(ErrorCode::CorruptSnapshot, std::string("snapshot content invalid: ") + e.what());
    }
    s.content_hash = computeContentHash(s);
    if (s.content_hash != stored) {
        throw Error(ErrorCode::CorruptSnapshot, "content hash mismatch", stored);
    }
    return s;
}

std::string saveSnapshot(const Snapshot& snapshot, const fs::path& store) {
    std::error_code ec;
    fs::create_directories(store, ec);
    if (ec) throw Error(ErrorCode::StoreUnavailable, "cannot create store " + store.string() + ": " + ec.message());
    const json payload = payloadJson(snapshot);
    const std::string payload_text = payload.dump();
    const std::string hash = sha256Hex(payload_text);
    const fs::path target = store / (hash + ".json");
    if (fs::exists(target)) return hash;  // content-addressed: identical content already stored
    const json doc{{"format", kFormat}, {"content_hash", hash}, {"payload", payload}};
    writeFileAtomic(target, doc.dump());
    return hash;
}

Snapshot loadSnapshot(const fs::path& store, std::string_view hash) {
    if (!isHexHash(hash)) throw Error(ErrorCode::NotFound, "no snapshot '" + std::string(hash) + "'", std::string(hash));
    const fs::path file = store / (std::string(hash) + ".json");
    if (!fs::exists(file)) throw Error(ErrorCode::NotFound, "no snapshot '" + std::string(hash) + "'", std::string(hash));
    Snapshot s = parseSnapshot(readFile(file));
    if (s.content_hash != hash) throw Error(ErrorCode::CorruptSnapshot, "stored under the wrong hash", std::string(hash));
    return s;
}

// ---------------------------------------------------------------------------

SnapshotStore::SnapshotStore(fs::path root) : root_(std::move(root)) {}

std::string SnapshotStore::commit(const Snapshot& snapshot) {
    std::lock_guard lock(write_mutex_);
    const std::string hash = saveSnapshot(snapshot, root_);
    writeFileAtomic(root_ / kLatestFile, hash + "\n");
    return hash;
}

std::optional<std::string> SnapshotStore::latestHash() const {
    const fs::path pointer = root_ / kLatestFile;
    std::ifstream in(pointer);
    if (!in) return std::nullopt;
    std::string hash;
    std::getline(in, hash);
    if (!isHexHash(hash)) return std::nullopt;
    return hash;
}

std::shared_ptr<const Snapshot> SnapshotStore::loadLatest() const {
    const auto hash = latestHash();
    if (!hash) throw Error(ErrorCode::NotFound, "no snapshot committed in " + root_.string());
    return load(*hash);
}

std::shared_ptr<const Snapshot> SnapshotStore::load(std::string_view hash) const {
    return std::make_shared<const Snapshot>(loadSnapshot(root_, hash));
}

}  // namespace infoveil
