#include "infoveil/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "infoveil/error.hpp"
#include "infoveil/geo.hpp"
#include "infoveil/ingest.hpp"
#include "infoveil/leadlag.hpp"
#include "infoveil/rsv.hpp"

namespace infoveil::fixtures {

namespace fs = std::filesystem;

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniformInt(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Removes the components along `basis` (orthonormal) twice over, then normalises.
void orthonormalize(Vec& v, const std::vector<Vec>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) {
            const double p = dot(v, b);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
        }
    }
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
}

// Unit sample standard deviation, zero mean.
Vec zscore(Vec v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (auto& x : v) {
        x -= m;
        ss += x * x;
    }
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    for (auto& x : v) x /= sd;
    return v;
}

std::vector<int> quantizeKeyed(rsv::Axis axis, const std::vector<std::string>& keys, const Vec& shares) {
    rsv::RawSharePanel panel{axis, {}};
    for (std::size_t i = 0; i < keys.size(); ++i) panel.entries.push_back({keys[i], shares[i], 1.0});
    const auto q = rsv::quantizeRsv(panel);
    std::vector<int> out;
    for (const auto& v : q) out.push_back(v.rsv);
    return out;
}

std::vector<RsvPoint> quantizeOverTime(const std::vector<Date>& dates, const Vec& shares) {
    std::vector<std::string> keys;
    for (auto d : dates) keys.push_back(formatDate(d));
    const auto values = quantizeKeyed(rsv::Axis::TimeWithinGeo, keys, shares);
    std::vector<RsvPoint> out;
    for (std::size_t i = 0; i < dates.size(); ++i) out.push_back({dates[i], values[i]});
    return out;
}

// Integer targets pushed through the quantizer; with a maximum of 100 they
// come back unchanged.
std::vector<RsvPoint> exactOverTime(const std::vector<Date>& dates, const std::vector<int>& values) {
    Vec shares;
    for (int v : values) shares.push_back(static_cast<double>(v) / 100.0);
    return quantizeOverTime(dates, shares);
}

const DateRange kPanelWindow{parseDate("2020-03-01"), parseDate("2020-04-15")};

constexpr std::array<double, 5> kPlantedFactor{3.0, 2.6, 2.2, 1.8, 1.4};
constexpr std::array<double, 3> kPlantedCorr{0.98, 0.95, -0.93};

StatePanel buildTypology(const std::vector<std::string>& query_ids, const std::set<std::string>& masked,
                         std::uint64_t seed) {
    Rng rng(seed);
    const auto& states = geo::stateCodes();
    const std::size_t ns = states.size();

    std::vector<std::size_t> planted_rows;
    for (const auto& p : plantedStates()) {
        planted_rows.push_back(static_cast<std::size_t>(std::find(states.begin(), states.end(), p) - states.begin()));
    }
    std::vector<bool> is_planted(ns, false);
    for (auto r : planted_rows) is_planted[r] = true;

    Vec f(ns);
    for (std::size_t s = 0; s < ns; ++s) f[s] = rng.uniform(-1.0, 0.3);
    for (std::size_t i = 0; i < planted_rows.size(); ++i) f[planted_rows[i]] = kPlantedFactor[i];

    Vec ones(ns, 1.0 / std::sqrt(static_cast<double>(ns)));
    Vec fu = f;
    orthonormalize(fu, {ones});
    std::vector<Vec> basis{ones, fu};

    // Residuals of the planted columns live off the planted states, so the
    // planted states' scores come from the factor alone.
    std::vector<Vec> residuals;
    {
        Vec ones_r(ns, 0.0), f_r(ns, 0.0);
        for (std::size_t s = 0; s < ns; ++s) {
            if (!is_planted[s]) {
                ones_r[s] = 1.0;
                f_r[s] = f[s];
            }
        }
        orthonormalize(ones_r, {});
        orthonormalize(f_r, {ones_r});
        std::vector<Vec> restricted{ones_r, f_r};
        for (std::size_t j = 0; j < kPlantedCorr.size(); ++j) {
            Vec e(ns, 0.0);
            for (std::size_t s = 0; s < ns; ++s) e[s] = is_planted[s] ? 0.0 : rng.normal();
            orthonormalize(e, restricted);
            restricted.push_back(e);
            residuals.push_back(e);
            basis.push_back(e);
        }
    }

    const Vec fz = zscore(f);
    StatePanel panel(states, query_ids, kPanelWindow);
    const auto& planted = plantedQueries();
    for (std::size_t q = 0; q < query_ids.size(); ++q) {
        Vec z;
        const auto pit = std::find(planted.begin(), planted.end(), query_ids[q]);
        if (pit != planted.end()) {
            const auto j = static_cast<std::size_t>(pit - planted.begin());
            const double rho = kPlantedCorr[j];
            const Vec ez = zscore(residuals[j]);
            z.resize(ns);
            for (std::size_t s = 0; s < ns; ++s) z[s] = rho * fz[s] + std::sqrt(1.0 - rho * rho) * ez[s];
        } else {
            Vec e(ns);
            for (auto& x : e) x = rng.normal();
            orthonormalize(e, basis);
            basis.push_back(e);
            z = zscore(e);
        }

        std::set<std::size_t> missing;
        if (masked.count(query_ids[q])) {
            const int n_missing = rng.uniformInt(1, 3);
            while (static_cast<int>(missing.size()) < n_missing) {
                missing.insert(static_cast<std::size_t>(rng.uniformInt(0, static_cast<int>(ns) - 1)));
            }
        }
        std::vector<std::string> keys;
        Vec shares;
        std::vector<std::size_t> rows;
        for (std::size_t s = 0; s < ns; ++s) {
            if (missing.count(s)) continue;
            keys.push_back(states[s]);
            shares.push_back(std::max(1.0, 50.0 + 12.0 * z[s]));
            rows.push_back(s);
        }
        const auto values = quantizeKeyed(rsv::Axis::GeoWithinWindow, keys, shares);
        for (std::size_t i = 0; i < rows.size(); ++i) panel.set(rows[i], q, static_cast<double>(values[i]));
    }
    return panel;
}

std::vector<Date> sundays(Date first, std::size_t n) {
    std::vector<Date> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(addDays(first, static_cast<std::int64_t>(7 * i)));
    return out;
}

bool inMonth(Date d, int y, unsigned m) {
    return d.year() == std::chrono::year(y) && d.month() == std::chrono::month(m);
}

// Generic national series: level, yearly seasonality, noise and a spring
// 2020 bump of random sign.
std::vector<RsvPoint> genericNational(Rng& rng, const std::vector<Date>& weeks) {
    const double level = rng.uniform(20.0, 60.0);
    const double amp = rng.uniform(0.0, 8.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double bump = rng.uniform(-15.0, 60.0);
    Vec shares;
    for (auto d : weeks) {
        double v = level + amp * std::cos(2.0 * std::numbers::pi * isoWeekOfYear(d) / 52.0 + phase) + 3.0 * rng.normal();
        if (d >= parseDate("2020-03-01")) v += bump;
        shares.push_back(std::max(0.5, v));
    }
    return quantizeOverTime(weeks, shares);
}

std::vector<RsvPoint> changeTargetSeries(Rng& rng, const std::vector<Date>& weeks, const ChangeTarget& t) {
    std::vector<int> values;
    const int jan = static_cast<int>(t.january_mean);
    const int mar = static_cast<int>(t.march_mean);
    for (auto d : weeks) {
        if (inMonth(d, 2020, 1)) {
            values.push_back(jan);
        } else if (inMonth(d, 2020, 3)) {
            values.push_back(mar);
        } else if (d > parseDate("2020-03-31")) {
            values.push_back(mar + rng.uniformInt(-3, 3));
        } else {
            values.push_back(rng.uniformInt(55, 92));
        }
    }
    return exactOverTime(weeks, values);
}

// Jan 2020 mean 0.5 against a March mean of 75: a 150x rise.
std::vector<RsvPoint> socialDistancingSeries(const std::vector<Date>& weeks) {
    std::vector<int> values;
    const std::vector<int> jan{1, 1, 0, 0};
    const std::vector<int> mar{55, 65, 75, 85, 95};
    std::size_t ji = 0, mi = 0;
    for (auto d : weeks) {
        if (inMonth(d, 2020, 1)) {
            values.push_back(jan.at(ji++));
        } else if (inMonth(d, 2020, 3)) {
            values.push_back(mar.at(mi++));
        } else if (d > parseDate("2020-03-31")) {
            values.push_back(100);
        } else if (inMonth(d, 2020, 2)) {
            values.push_back(2);
        } else {
            values.push_back(d.year() >= std::chrono::year(2019) ? 1 : 0);
        }
    }
    return exactOverTime(weeks, values);
}

}  // namespace

const std::vector<std::string>& plantedStates() {
    static const std::vector<std::string> v{"US-MS", "US-LA", "US-AL", "US-AR", "US-KY"};
    return v;
}

const std::vector<std::string>& plantedQueries() {
    static const std::vector<std::string> v{"stimulus-check", "disability-benefits", "social-distancing"};
    return v;
}

StatePanel plantedTypologyPanel(const Catalog& catalog, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& q : catalog.queries()) ids.push_back(q.id);
    for (const auto& p : plantedQueries()) {
        if (!catalog.find(p)) throw Error(ErrorCode::NotFound, "catalog lacks planted query '" + p + "'", p);
    }
    const auto& inc = incompleteReferenceQueryIds();
    return buildTypology(ids, std::set<std::string>(inc.begin(), inc.end()), seed);
}

StatePanel plantedTypologyPanel(std::size_t n_queries, std::uint64_t seed) {
    if (n_queries < plantedQueries().size() || n_queries > 40) {
        throw Error(ErrorCode::InvalidArgument, "planted panel needs 3..40 queries");
    }
    std::vector<std::string> ids = plantedQueries();
    for (std::size_t i = ids.size(); i < n_queries; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "noise-%02zu", i - plantedQueries().size() + 1);
        ids.emplace_back(buf);
    }
    return buildTypology(ids, {}, seed);
}

std::vector<Date> nationalWeeks() { return sundays(parseDate("2016-01-03"), 224); }

const std::vector<ChangeTarget>& changeTargets() {
    static const std::vector<ChangeTarget> v{
        {"health-insurance", 100.0, 82.0},
        {"medicaid", 100.0, 77.0},
        {"medicare", 100.0, 74.0},
    };
    return v;
}

RsvSeries crossingSeries(std::string query_id, Date crossing) {
    const Date first = parseDate("2020-03-01");
    const Date last = parseDate("2020-04-15");
    const auto c = daysBetween(first, crossing);
    const auto n = daysBetween(first, last) + 1;
    if (c < 1 || c >= n - 1) throw Error(ErrorCode::InvalidArgument, "crossing must fall inside Mar 2 - Apr 14 2020");
    std::vector<Date> dates;
    std::vector<int> values;
    for (std::int64_t i = 0; i < n; ++i) {
        dates.push_back(addDays(first, i));
        if (i < c) {
            values.push_back(static_cast<int>(std::lround(5.0 + 40.0 * static_cast<double>(i) / static_cast<double>(c))));
        } else {
            values.push_back(static_cast<int>(
                std::lround(50.0 + 50.0 * static_cast<double>(i - c) / static_cast<double>(n - 1 - c))));
        }
    }
    RsvSeries s{std::move(query_id), "US", Granularity::Daily, exactOverTime(dates, values), ""};
    return s;
}

LagPair plantedLagPair(Rng& rng, std::size_t n, int lag, double phi, double noise_ratio) {
    const std::size_t pad = static_cast<std::size_t>(std::abs(lag));
    const std::size_t burn = 50;
    std::vector<double> x;
    double prev = 0.0;
    for (std::size_t i = 0; i < burn + n + 2 * pad; ++i) {
        prev = phi * prev + rng.normal();
        if (i >= burn) x.push_back(prev);
    }
    // x[pad + t] is the query at t; indicator(t) = query(t - lag).
    const double signal_sd = 1.0 / std::sqrt(1.0 - phi * phi);
    const auto weeks = sundays(parseDate("2010-01-03"), n);
    LagPair out;
    out.planted_lag = lag;
    out.query.granularity = Granularity::Weekly;
    out.indicator.granularity = Granularity::Weekly;
    for (std::size_t t = 0; t < n; ++t) {
        out.query.points.push_back({weeks[t], x[pad + t]});
        const double base = x[static_cast<std::size_t>(static_cast<std::int64_t>(pad + t) - lag)];
        out.indicator.points.push_back({weeks[t], base + noise_ratio * signal_sd * rng.normal()});
    }
    return out;
}

Snapshot referenceSnapshot(const Catalog& catalog, std::uint64_t seed, std::string created_at) {
    Rng rng(seed);
    Snapshot s;
    s.created_at = std::move(created_at);
    s.catalog_version = catalog.version();

    const auto weeks = nationalWeeks();
    std::vector<RsvPoint> unemployment_query;
    std::vector<RsvPoint> medicaid_query;
    for (const auto& q : catalog.queries()) {
        RsvSeries series{q.id, "US", Granularity::Weekly, {}, ""};
        const auto target = std::find_if(changeTargets().begin(), changeTargets().end(),
                                         [&](const ChangeTarget& t) { return t.query_id == q.id; });
        if (target != changeTargets().end()) {
            series.points = changeTargetSeries(rng, weeks, *target);
        } else if (q.id == "social-distancing") {
            series.points = socialDistancingSeries(weeks);
        } else if (q.id == "unemployment-benefits") {
            Vec shares;
            double ar = 0.0;
            for (auto d : weeks) {
                ar = 0.8 * ar + rng.normal();
                double v = 30.0 + 5.0 * ar;
                if (d >= parseDate("2020-03-15")) v += 90.0;
                shares.push_back(std::max(0.5, v));
            }
            series.points = quantizeOverTime(weeks, shares);
        } else {
            series.points = genericNational(rng, weeks);
        }
        if (q.id == "unemployment-benefits") unemployment_query = series.points;
        if (q.id == "medicaid") medicaid_query = series.points;
        s.national.push_back(std::move(series));
    }
    s.national.push_back(crossingSeries("social-distancing", parseDate("2020-03-08")));
    s.national.push_back(crossingSeries("how-to-make-coronavirus-mask", parseDate("2020-03-23")));

    s.state_window = plantedTypologyPanel(catalog, seed ^ 0x9e3779b97f4a7c15ULL);

    // State weekly series scale the window panel level over 16 weeks.
    const auto state_weeks = sundays(parseDate("2019-12-29"), 16);
    for (std::size_t q = 0; q < s.state_window.queryCount(); ++q) {
        const double ramp = rng.uniform(-0.5, 1.0);
        for (std::size_t st = 0; st < s.state_window.stateCount(); ++st) {
            const auto level = s.state_window.at(st, q);
            if (!level) continue;
            Vec shares;
            for (std::size_t t = 0; t < state_weeks.size(); ++t) {
                const double progress = static_cast<double>(t) / static_cast<double>(state_weeks.size() - 1);
                const double v = std::max(1.0, *level) * (1.0 + ramp * progress) + 2.0 * rng.normal();
                shares.push_back(std::max(0.5, v));
            }
            s.state_weekly.push_back({s.state_window.queryIds()[q], s.state_window.states()[st], Granularity::Weekly,
                                      quantizeOverTime(state_weeks, shares), ""});
        }
    }

    // Synthetic DOL-format claims: Saturday week endings, driven by the
    // query one week earlier.
    IndicatorSeries claims{ingest::kUnemploymentIndicator, Granularity::Weekly, {}};
    for (std::size_t t = 1; t < weeks.size(); ++t) {
        const double v = 210000.0 + 2500.0 * unemployment_query[t - 1].value + 4000.0 * rng.normal();
        claims.points.push_back({addDays(weeks[t], 6), std::round(std::max(0.0, v))});
    }
    s.indicators.push_back(std::move(claims));

    IndicatorSeries applications{ingest::kMedicaidIndicator, Granularity::Monthly, {}};
    {
        TimeSeries q = leadlag::toMonthly(toTimeSeries(RsvSeries{"medicaid", "US", Granularity::Weekly, medicaid_query, ""}));
        for (const auto& p : q.points) {
            const Date first{p.date.year(), p.date.month(), std::chrono::day(1)};
            const double v = 150000.0 + 1500.0 * p.value + 6000.0 * rng.normal();
            applications.points.push_back({first, std::round(std::max(0.0, v))});
        }
    }
    s.indicators.push_back(std::move(applications));

    s.events = leadlag::defaultPolicyEvents();
    s.content_hash = computeContentHash(s);
    return s;
}

void writeFixtureDirectory(const Snapshot& snapshot, const fs::path& dir) {
    fs::create_directories(dir);
    const auto write = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::trunc | std::ios::binary);
        out << text;
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
    };
    write(ingest::FixtureLayout::kNational, ingest::writeRsvCsv(snapshot.national));
    if (!snapshot.state_weekly.empty()) write(ingest::FixtureLayout::kStateWeekly, ingest::writeRsvCsv(snapshot.state_weekly));
    write(ingest::FixtureLayout::kStateWindow, ingest::writeWindowPanelCsv(snapshot.state_window));
    for (const auto& ind : snapshot.indicators) {
        if (ind.name == ingest::kUnemploymentIndicator) {
            write(ingest::FixtureLayout::kUnemployment,
                  ingest::writeIndicatorCsv(ind, ingest::IndicatorSchema::UnemploymentWeekly));
        } else if (ind.name == ingest::kMedicaidIndicator) {
            write(ingest::FixtureLayout::kMedicaid, ingest::writeIndicatorCsv(ind, ingest::IndicatorSchema::MedicaidMonthly));
        }
    }
    write(ingest::FixtureLayout::kEvents, leadlag::writePolicyEventsCsv(snapshot.events));
}

}  // namespace infoveil::fixtures
