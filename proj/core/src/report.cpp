#include "infoveil/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "infoveil/analytics.hpp"
#include "infoveil/csv.hpp"
#include "infoveil/error.hpp"
#include "infoveil/geo.hpp"
#include "infoveil/leadlag.hpp"

namespace infoveil::report {

using nlohmann::json;

std::string formatNumber(double value) {
    if (value == 0.0) return "0";  // also folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    if (std::string_view(buf) == "-0") return "0";
    return buf;
}

double canonicalNumber(double value) {
    const double v = std::strtod(formatNumber(value).c_str(), nullptr);
    return v == 0.0 ? 0.0 : v;
}

std::string Table::toCsv() const {
    std::string out = csv::joinRow(header) + "\n";
    for (const auto& row : rows) out += csv::joinRow(row) + "\n";
    return out;
}

namespace {

json num(double v) { return canonicalNumber(v); }
json optNum(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
std::string optCell(const std::optional<double>& v) { return v ? formatNumber(*v) : std::string(); }

[[noreturn]] void notFound(const std::string& what, const std::string& id) {
    throw Error(ErrorCode::NotFound, what + " '" + id + "' not found", id);
}

}  // namespace

Report catalogReport(const Catalog& catalog) {
    Report r;
    Table t{"catalog", {"id", "theme", "expr", "ideology"}, {}};
    json queries = json::array();
    for (const auto& q : catalog.queries()) {
        queries.push_back({{"id", q.id},
                           {"theme", toString(q.theme)},
                           {"expr", q.expr.canonicalText()},
                           {"terms", q.expr.terms()},
                           {"ideology", toString(q.ideology)}});
        t.rows.push_back({q.id, std::string(toString(q.theme)), q.expr.canonicalText(), std::string(toString(q.ideology))});
    }
    r.data = {{"version", catalog.version()}, {"queries", std::move(queries)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report trendsReport(const Snapshot& s, std::string_view query_id, std::string_view geo, Granularity granularity,
                    const std::optional<DateRange>& range) {
    const RsvSeries* series = s.findSeries(query_id, geo, granularity);
    if (!series) {
        notFound("series", std::string(query_id) + "@" + std::string(geo) + "/" + std::string(toString(granularity)));
    }
    Report r;
    Table t{"trends", {"date", "value"}, {}};
    json points = json::array();
    for (const auto& p : series->points) {
        if (range && !range->contains(p.date)) continue;
        points.push_back({{"date", formatDate(p.date)}, {"value", p.value}});
        t.rows.push_back({formatDate(p.date), std::to_string(p.value)});
    }
    r.data = {{"query_id", series->query_id},
              {"geo", series->geo},
              {"granularity", toString(series->granularity)},
              {"points", std::move(points)}};
    r.tables.push_back(std::move(t));
    return r;
}

StatePanel resolvePanel(const Snapshot& s, const std::optional<DateRange>& range) {
    if (!range) return s.state_window;
    std::vector<std::string> queries;
    std::map<std::pair<std::string, std::string>, const RsvSeries*> index;
    for (const auto& series : s.state_weekly) {
        if (std::find(queries.begin(), queries.end(), series.query_id) == queries.end()) queries.push_back(series.query_id);
        index[{series.geo, series.query_id}] = &series;
    }
    std::vector<std::string> states;
    for (const auto& code : geo::stateCodes()) {
        for (const auto& q : queries) {
            if (index.count({code, q})) {
                states.push_back(code);
                break;
            }
        }
    }
    StatePanel panel(states, queries, *range);
    for (std::size_t st = 0; st < states.size(); ++st) {
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto it = index.find({states[st], queries[q]});
            if (it == index.end()) continue;
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& p : it->second->points) {
                if (range->contains(p.date)) {
                    sum += p.value;
                    ++n;
                }
            }
            if (n) panel.set(st, q, sum / static_cast<double>(n));
        }
    }
    return panel;
}

Report panelReport(const Snapshot& s, const std::optional<DateRange>& range) {
    const StatePanel panel = resolvePanel(s, range);
    Report r;
    Table t{"panel", {"state"}, {}};
    for (const auto& q : panel.queryIds()) t.header.push_back(q);
    json values = json::array();
    for (std::size_t st = 0; st < panel.stateCount(); ++st) {
        json row = json::array();
        std::vector<std::string> cells{panel.states()[st]};
        for (std::size_t q = 0; q < panel.queryCount(); ++q) {
            row.push_back(optNum(panel.at(st, q)));
            cells.push_back(optCell(panel.at(st, q)));
        }
        values.push_back(std::move(row));
        t.rows.push_back(std::move(cells));
    }
    r.data = {{"window", formatWindow(panel.window())},
              {"states", panel.states()},
              {"query_ids", panel.queryIds()},
              {"values", std::move(values)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report changeReport(const Snapshot& s, const DateRange& from_window, const DateRange& to_window,
                    std::optional<double> cap, Granularity granularity) {
    Report r;
    Table t{"change", {"query_id", "from_mean", "to_mean", "change_percent", "status"}, {}};
    json rows = json::array();
    for (const auto& series : s.national) {
        if (series.granularity != granularity) continue;
        json row{{"query_id", series.query_id}};
        try {
            const auto c = analytics::percentChange(series, from_window, to_window, cap);
            const bool defined = c.status != analytics::ChangeStatus::ZeroBaseline;
            row["from_mean"] = num(c.from_mean);
            row["to_mean"] = num(c.to_mean);
            row["change_percent"] = defined ? num(c.percent) : json(nullptr);
            row["status"] = toString(c.status);
            t.rows.push_back({series.query_id, formatNumber(c.from_mean), formatNumber(c.to_mean),
                              defined ? formatNumber(c.percent) : "", std::string(toString(c.status))});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyWindow) throw;
            row["from_mean"] = nullptr;
            row["to_mean"] = nullptr;
            row["change_percent"] = nullptr;
            row["status"] = "empty_window";
            t.rows.push_back({series.query_id, "", "", "", "empty_window"});
        }
        rows.push_back(std::move(row));
    }
    r.data = {{"from_window", formatWindow(from_window)},
              {"to_window", formatWindow(to_window)},
              {"cap", cap ? num(*cap) : json(nullptr)},
              {"granularity", toString(granularity)},
              {"rows", std::move(rows)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report correlationReport(const Snapshot& s, bool keep_incomplete) {
    StatePanel panel = s.state_window;
    std::vector<std::string> dropped;
    if (!keep_incomplete) {
        auto d = analytics::dropIncompleteQueries(panel);
        panel = std::move(d.panel);
        dropped = std::move(d.dropped);
    }
    const auto m = analytics::pearsonMatrix(panel);
    Report r;
    Table t{"correlation", {"query_a", "query_b", "r", "n_pairs", "band"}, {}};
    json pairs = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i; j < m.size(); ++j) {
            const auto rv = m.r(i, j);
            const std::string band = rv ? std::string(analytics::toString(analytics::classifyBand(*rv))) : "";
            pairs.push_back({{"query_a", m.queryIds()[i]},
                             {"query_b", m.queryIds()[j]},
                             {"r", optNum(rv)},
                             {"n_pairs", m.pairs(i, j)},
                             {"band", rv ? json(band) : json(nullptr)}});
            t.rows.push_back({m.queryIds()[i], m.queryIds()[j], optCell(rv), std::to_string(m.pairs(i, j)), band});
        }
    }
    r.data = {{"query_ids", m.queryIds()}, {"dropped", dropped}, {"pairs", std::move(pairs)}};
    r.tables.push_back(std::move(t));
    return r;
}

namespace {

json interpretationJson(const analytics::ComponentInterpretation& in) {
    json salient = json::array();
    for (const auto& s : in.salient) salient.push_back({{"query_id", s.query_id}, {"loading", num(s.loading)}});
    json top = json::array();
    for (const auto& s : in.top_states) top.push_back({{"state", s.state}, {"score", num(s.score)}});
    return {{"component", in.component_index + 1},
            {"threshold", num(in.threshold)},
            {"salient", std::move(salient)},
            {"top_states", std::move(top)},
            {"label", in.label ? json(*in.label) : json(nullptr)}};
}

struct PcaRun {
    analytics::PcaResult result;
    std::vector<std::string> dropped;
};

PcaRun runPca(const Snapshot& s, std::size_t k) {
    auto d = analytics::dropIncompleteQueries(s.state_window);
    return {analytics::pca(d.panel, k), std::move(d.dropped)};
}

}  // namespace

Report pcaReport(const Snapshot& s, const PcaParams& params) {
    const PcaRun run = runPca(s, params.k);
    const auto& p = run.result;

    Report r;
    Table loadings{"pca_loadings", {"component", "query_id", "loading"}, {}};
    Table scores{"pca_scores", {"component", "state", "score"}, {}};
    Table variance{"pca_variance", {"component", "explained_variance_ratio"}, {}};
    Table salient{"pca_salient", {"component", "rank", "query_id", "loading"}, {}};
    Table top{"pca_top_states", {"component", "rank", "state", "score"}, {}};

    json components = json::array();
    json interpretations = json::array();
    for (std::size_t c = 0; c < p.components.size(); ++c) {
        const auto& comp = p.components[c];
        const std::string idx = std::to_string(c + 1);
        json lj = json::array();
        for (std::size_t q = 0; q < p.query_ids.size(); ++q) {
            lj.push_back({{"query_id", p.query_ids[q]}, {"loading", num(comp.loadings[q])}});
            loadings.rows.push_back({idx, p.query_ids[q], formatNumber(comp.loadings[q])});
        }
        json sj = json::array();
        for (std::size_t st = 0; st < p.states.size(); ++st) {
            sj.push_back({{"state", p.states[st]}, {"score", num(comp.scores[st])}});
            scores.rows.push_back({idx, p.states[st], formatNumber(comp.scores[st])});
        }
        variance.rows.push_back({idx, formatNumber(comp.explained_variance_ratio)});
        components.push_back({{"component", c + 1},
                              {"eigenvalue", num(comp.eigenvalue)},
                              {"explained_variance_ratio", num(comp.explained_variance_ratio)},
                              {"unstable", comp.unstable},
                              {"loadings", std::move(lj)},
                              {"scores", std::move(sj)}});

        const auto in = analytics::interpretComponent(p, c, params.threshold, params.n_top);
        for (std::size_t i = 0; i < in.salient.size(); ++i) {
            salient.rows.push_back({idx, std::to_string(i + 1), in.salient[i].query_id, formatNumber(in.salient[i].loading)});
        }
        for (std::size_t i = 0; i < in.top_states.size(); ++i) {
            top.rows.push_back({idx, std::to_string(i + 1), in.top_states[i].state, formatNumber(in.top_states[i].score)});
        }
        interpretations.push_back(interpretationJson(in));
    }
    r.data = {{"k", params.k},
              {"threshold", num(params.threshold)},
              {"n_top", params.n_top},
              {"standardization", "zscore"},
              {"dropped", run.dropped},
              {"query_ids", p.query_ids},
              {"states", p.states},
              {"components", std::move(components)},
              {"interpretations", std::move(interpretations)}};
    r.tables = {std::move(loadings), std::move(scores), std::move(variance), std::move(salient), std::move(top)};
    return r;
}

Report interpretReport(const Snapshot& s, std::size_t k, std::size_t component, double threshold, std::size_t n_top) {
    if (component == 0) throw Error(ErrorCode::BadIndex, "components are numbered from 1");
    const PcaRun run = runPca(s, k);
    const auto in = analytics::interpretComponent(run.result, component - 1, threshold, n_top);
    Report r;
    r.data = interpretationJson(in);
    Table salient{"pca_salient", {"component", "rank", "query_id", "loading"}, {}};
    Table top{"pca_top_states", {"component", "rank", "state", "score"}, {}};
    const std::string idx = std::to_string(component);
    for (std::size_t i = 0; i < in.salient.size(); ++i) {
        salient.rows.push_back({idx, std::to_string(i + 1), in.salient[i].query_id, formatNumber(in.salient[i].loading)});
    }
    for (std::size_t i = 0; i < in.top_states.size(); ++i) {
        top.rows.push_back({idx, std::to_string(i + 1), in.top_states[i].state, formatNumber(in.top_states[i].score)});
    }
    r.tables = {std::move(salient), std::move(top)};
    return r;
}

Report choroplethReport(const Snapshot& s, std::string_view query_id, const std::optional<DateRange>& range) {
    const StatePanel panel = resolvePanel(s, range);
    const auto c = geo::choropleth(panel, query_id);
    Report r;
    Table t{"choropleth", {"geo", "value"}, {}};
    json values = json::array();
    for (const auto& v : c.values) {
        values.push_back({{"geo", v.geo}, {"value", optNum(v.value)}});
        t.rows.push_back({v.geo, optCell(v.value)});
    }
    r.data = {{"query_id", c.query_id}, {"window", formatWindow(c.window)}, {"values", std::move(values)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report leadlagReport(const Snapshot& s, const LeadLagParams& params) {
    const RsvSeries* q = s.findSeries(params.query_id, "US", Granularity::Weekly);
    if (!q) notFound("national weekly series", params.query_id);
    const IndicatorSeries* ind = s.findIndicator(params.indicator);
    if (!ind) notFound("indicator", params.indicator);

    TimeSeries query = toTimeSeries(*q);
    TimeSeries indicator = toTimeSeries(*ind);
    if (indicator.granularity == Granularity::Monthly) query = leadlag::toMonthly(query);
    if (params.adjust_baseline) indicator = leadlag::seasonalAdjust(indicator, *params.adjust_baseline);

    std::vector<leadlag::LagCorrResult> profile;
    std::optional<leadlag::LagCorrResult> best;
    if (params.lag) {
        profile.push_back(leadlag::laggedCorrelation(query, indicator, *params.lag));
    } else {
        profile = leadlag::lagProfile(query, indicator, params.lag_min, params.lag_max);
        best = leadlag::bestLag(query, indicator, params.lag_min, params.lag_max);
    }

    const auto lagJson = [](const leadlag::LagCorrResult& l) { return json{{"lag", l.lag}, {"r", num(l.r)}, {"n", l.n}}; };
    Report r;
    Table t{"leadlag", {"lag", "r", "n"}, {}};
    json pj = json::array();
    for (const auto& l : profile) {
        pj.push_back(lagJson(l));
        t.rows.push_back({std::to_string(l.lag), formatNumber(l.r), std::to_string(l.n)});
    }
    r.data = {{"query_id", params.query_id},
              {"indicator", params.indicator},
              {"granularity", toString(indicator.granularity)},
              {"seasonally_adjusted", params.adjust_baseline.has_value()},
              {"profile", std::move(pj)},
              {"best", best ? lagJson(*best) : json(nullptr)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report leadtimeReport(const Snapshot& s, std::string_view query_id, int threshold,
                      std::optional<Granularity> granularity) {
    const RsvSeries* series = nullptr;
    if (granularity) {
        series = s.findSeries(query_id, "US", *granularity);
    } else {
        series = s.findSeries(query_id, "US", Granularity::Daily);
        if (!series) series = s.findSeries(query_id, "US", Granularity::Weekly);
    }
    if (!series) notFound("national series", std::string(query_id));
    Report r;
    Table t{"leadtime", {"event", "event_date", "crossing_date", "lead_days"}, {}};
    json events = json::array();
    for (const auto& e : s.events) {
        const auto lt = leadlag::leadTime(*series, threshold, e);
        events.push_back({{"name", e.name},
                          {"date", formatDate(e.date)},
                          {"crossing", lt.crossing ? json(formatDate(*lt.crossing)) : json(nullptr)},
                          {"lead_days", lt.days ? json(*lt.days) : json(nullptr)}});
        t.rows.push_back({e.name, formatDate(e.date), lt.crossing ? formatDate(*lt.crossing) : "",
                          lt.days ? std::to_string(*lt.days) : ""});
    }
    r.data = {{"query_id", std::string(query_id)},
              {"threshold", threshold},
              {"granularity", toString(series->granularity)},
              {"events", std::move(events)}};
    r.tables.push_back(std::move(t));
    return r;
}

}  // namespace infoveil::report
