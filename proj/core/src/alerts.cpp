#include "infoveil/alerts.hpp"

#include <fstream>
#include <sstream>

#include "infoveil/analytics.hpp"
#include "infoveil/error.hpp"
#include "infoveil/geo.hpp"

namespace infoveil::alerts {

using nlohmann::json;

namespace {

json ruleJson(const AlertRule& rule) {
    if (const auto* p = std::get_if<PercentChangeOver>(&rule)) {
        return {{"type", "percent_change_over"}, {"window_weeks", p->window_weeks}, {"threshold_percent", p->threshold_percent}};
    }
    const auto& t = std::get<ThresholdCross>(rule);
    return {{"type", "threshold_cross"}, {"rsv_value", t.rsv_value}};
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, "watchlist: " + msg); }

AlertRule ruleFromJson(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad("rule needs a string 'type'");
    const std::string type = j["type"];
    if (type == "percent_change_over") {
        PercentChangeOver p;
        if (j.contains("window_weeks")) {
            if (!j["window_weeks"].is_number_integer()) bad("window_weeks must be an integer");
            p.window_weeks = j["window_weeks"];
        }
        if (j.contains("threshold_percent")) {
            if (!j["threshold_percent"].is_number()) bad("threshold_percent must be a number");
            p.threshold_percent = j["threshold_percent"];
        }
        if (p.window_weeks < 1) bad("window_weeks must be >= 1");
        return p;
    }
    if (type == "threshold_cross") {
        ThresholdCross t;
        if (j.contains("rsv_value")) {
            if (!j["rsv_value"].is_number_integer()) bad("rsv_value must be an integer");
            t.rsv_value = j["rsv_value"];
        }
        if (t.rsv_value < 0 || t.rsv_value > 100) bad("rsv_value must be in 0..100");
        return t;
    }
    bad("unknown rule type '" + type + "'");
}

json entryJson(const WatchEntry& e) {
    return {{"query_id", e.query_id}, {"geo", e.geo}, {"granularity", toString(e.granularity)}, {"rule", ruleJson(e.rule)}};
}

}  // namespace

std::string describe(const AlertRule& rule) {
    if (const auto* p = std::get_if<PercentChangeOver>(&rule)) {
        std::ostringstream os;
        os << "change over " << p->window_weeks << " periods >= " << p->threshold_percent << "%";
        return os.str();
    }
    return "value >= " + std::to_string(std::get<ThresholdCross>(rule).rsv_value);
}

json toJson(const Watchlist& w) {
    json entries = json::array();
    for (const auto& e : w.entries) entries.push_back(entryJson(e));
    return {{"version", w.version}, {"entries", std::move(entries)}};
}

json toJson(const Alert& a) {
    return {{"query_id", a.query_id},
            {"geo", a.geo},
            {"rule", ruleJson(a.rule)},
            {"description", describe(a.rule)},
            {"trigger_date", formatDate(a.trigger_date)},
            {"observed", a.observed},
            {"snapshot", a.snapshot_hash}};
}

std::vector<WatchEntry> entriesFromJson(const json& entries) {
    if (!entries.is_array()) bad("entries must be an array");
    std::vector<WatchEntry> out;
    for (const auto& j : entries) {
        if (!j.is_object()) bad("entry must be an object");
        WatchEntry e;
        if (!j.contains("query_id") || !j["query_id"].is_string()) bad("entry needs a string query_id");
        e.query_id = j["query_id"];
        if (j.contains("geo")) {
            if (!j["geo"].is_string()) bad("geo must be a string");
            e.geo = j["geo"];
        }
        if (!geo::isValidGeo(e.geo)) bad("unknown geography '" + e.geo + "'");
        if (j.contains("granularity")) {
            if (!j["granularity"].is_string()) bad("granularity must be a string");
            try {
                e.granularity = parseGranularity(j["granularity"].get<std::string>());
            } catch (const Error&) {
                bad("unknown granularity");
            }
        }
        if (!j.contains("rule")) bad("entry needs a rule");
        e.rule = ruleFromJson(j["rule"]);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Alert> evaluateAlerts(const Snapshot& snapshot, const Watchlist& watchlist) {
    std::vector<Alert> out;
    for (const auto& e : watchlist.entries) {
        const RsvSeries* s = snapshot.findSeries(e.query_id, e.geo, e.granularity);
        if (!s || s->points.empty()) continue;
        const auto& pts = s->points;
        if (const auto* p = std::get_if<PercentChangeOver>(&e.rule)) {
            const auto w = static_cast<std::size_t>(p->window_weeks);
            if (pts.size() < 2 * w) continue;
            const DateRange before{pts[pts.size() - 2 * w].date, pts[pts.size() - w - 1].date};
            const DateRange after{pts[pts.size() - w].date, pts.back().date};
            const auto c = analytics::percentChange(*s, before, after);
            if (c.status == analytics::ChangeStatus::ZeroBaseline) continue;  // undefined change, not an alert
            if (c.percent >= p->threshold_percent) {
                out.push_back({e.query_id, e.geo, e.rule, pts.back().date, c.percent, snapshot.content_hash});
            }
        } else {
            const int level = std::get<ThresholdCross>(e.rule).rsv_value;
            for (const auto& pt : pts) {
                if (pt.value >= level) {
                    out.push_back({e.query_id, e.geo, e.rule, pt.date, static_cast<double>(pt.value),
                                   snapshot.content_hash});
                    break;
                }
            }
        }
    }
    return out;
}

WatchlistStore::WatchlistStore(std::filesystem::path file, Catalog catalog)
    : file_(std::move(file)), catalog_(std::move(catalog)) {
    std::ifstream in(file_);
    if (!in) return;
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        const json doc = json::parse(buf.str());
        current_.version = doc.at("version").get<std::uint64_t>();
        current_.entries = entriesFromJson(doc.at("entries"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "watchlist file " + file_.string() + " is malformed", e.what());
    }
}

Watchlist WatchlistStore::current() const {
    std::lock_guard lock(mutex_);
    return current_;
}

Watchlist WatchlistStore::replace(std::vector<WatchEntry> entries, std::uint64_t expected_version) {
    for (const auto& e : entries) {
        if (!catalog_.find(e.query_id)) {
            throw Error(ErrorCode::InvariantViolation, "watchlist query '" + e.query_id + "' is not in the catalog",
                        e.query_id);
        }
    }
    std::lock_guard lock(mutex_);
    if (expected_version != current_.version) {
        throw Error(ErrorCode::VersionConflict,
                    "watchlist is at version " + std::to_string(current_.version) + ", edit was based on " +
                        std::to_string(expected_version));
    }
    Watchlist next{std::move(entries), current_.version + 1};

    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    const auto tmp = file_.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << toJson(next).dump(2) << "\n";
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    }
    std::filesystem::rename(tmp, file_);
    current_ = std::move(next);
    return current_;
}

}  // namespace infoveil::alerts
