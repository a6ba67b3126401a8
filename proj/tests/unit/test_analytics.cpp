#include <doctest.h>

#include <functional>
#include <algorithm>
#include <cmath>

#include "infoveil/analytics.hpp"
#include "infoveil/error.hpp"
#include "infoveil/fixtures.hpp"
#include "oracles.hpp"

using namespace infoveil;
using namespace infoveil::analytics;

namespace {

ErrorCode codeOf(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

RsvSeries weekly(std::vector<std::pair<const char*, int>> pts) {
    RsvSeries s{"q", "US", Granularity::Weekly, {}, ""};
    for (auto [d, v] : pts) s.points.push_back({parseDate(d), v});
    return s;
}

// Only a label; panels do not validate state codes.
std::string geo_code(std::size_t i) { return "S" + std::to_string(i); }

StatePanel panelFrom(const std::vector<std::vector<std::optional<double>>>& rows) {
    std::vector<std::string> states, queries;
    for (std::size_t s = 0; s < rows.size(); ++s) states.push_back(geo_code(s));
    for (std::size_t q = 0; q < rows.at(0).size(); ++q) queries.push_back("q" + std::to_string(q));
    StatePanel p(states, queries, parseWindow("2020-03-01:2020-04-15"));
    for (std::size_t s = 0; s < rows.size(); ++s)
        for (std::size_t q = 0; q < rows[s].size(); ++q) p.set(s, q, rows[s][q]);
    return p;
}

}  // namespace

TEST_CASE("percent change arithmetic") {
    const auto s = weekly({{"2020-01-05", 10}, {"2020-01-12", 10}, {"2020-03-01", 30}, {"2020-03-08", 30}});
    const auto c = percentChange(s, parseWindow("2020-01"), parseWindow("2020-03"));
    CHECK(c.status == ChangeStatus::Value);
    CHECK(c.percent == 200.0);
    CHECK(c.from_mean == 10.0);
    CHECK(c.to_mean == 30.0);
}

TEST_CASE("percent change hits the planted decline exactly") {
    const auto s = weekly({{"2020-01-05", 100}, {"2020-01-12", 100}, {"2020-03-01", 82}, {"2020-03-08", 82}});
    CHECK(percentChange(s, parseWindow("2020-01"), parseWindow("2020-03")).percent == -18.0);
}

TEST_CASE("percent change cap and zero baseline") {
    const auto s = weekly({{"2020-01-05", 1}, {"2020-03-01", 100}, {"2020-03-08", 100}});
    // Mean 1 to mean 150 cannot be expressed with 0-100 points, so check the cap at a lower level.
    const auto capped = percentChange(s, parseWindow("2020-01"), parseWindow("2020-03"), 5000.0);
    CHECK(capped.status == ChangeStatus::Capped);
    CHECK(capped.percent == 5000.0);
    const auto uncapped = percentChange(s, parseWindow("2020-01"), parseWindow("2020-03"));
    CHECK(uncapped.percent == 9900.0);

    const auto z = weekly({{"2020-01-05", 0}, {"2020-03-01", 100}});
    const auto zc = percentChange(z, parseWindow("2020-01"), parseWindow("2020-03"), 10000.0);
    CHECK(zc.status == ChangeStatus::ZeroBaseline);
    CHECK(toString(zc.status) == "zero_baseline");

    CHECK(codeOf([&] { percentChange(s, parseWindow("2020-02"), parseWindow("2020-03")); }) == ErrorCode::EmptyWindow);
}

TEST_CASE("percent change is invariant to scaling both windows") {
    const auto a = weekly({{"2020-01-05", 20}, {"2020-01-12", 30}, {"2020-03-01", 45}, {"2020-03-08", 50}});
    const auto b = weekly({{"2020-01-05", 40}, {"2020-01-12", 60}, {"2020-03-01", 90}, {"2020-03-08", 100}});
    const auto ca = percentChange(a, parseWindow("2020-01"), parseWindow("2020-03"));
    const auto cb = percentChange(b, parseWindow("2020-01"), parseWindow("2020-03"));
    CHECK(ca.percent == doctest::Approx(cb.percent).epsilon(1e-12));
}

TEST_CASE("drop incomplete queries") {
    auto p = panelFrom({{1.0, 2.0, 3.0}, {4.0, std::nullopt, 6.0}, {7.0, 8.0, 9.0}});
    const auto d = dropIncompleteQueries(p);
    CHECK(d.dropped == std::vector<std::string>{"q1"});
    CHECK(d.panel.queryIds() == std::vector<std::string>{"q0", "q2"});
    CHECK_FALSE(d.panel.hasMissing());
    CHECK(*d.panel.at(1, 1) == 6.0);

    auto complete = panelFrom({{1.0, 2.0}, {3.0, 4.0}});
    const auto same = dropIncompleteQueries(complete);
    CHECK(same.dropped.empty());
    CHECK(same.panel == complete);

    auto hopeless = panelFrom({{std::nullopt, 1.0}, {1.0, std::nullopt}});
    CHECK(codeOf([&] { dropIncompleteQueries(hopeless); }) == ErrorCode::AllQueriesDropped);
}

TEST_CASE("drop on the reference-shaped panel leaves 30 of 39") {
    const Catalog c = loadCatalog();
    const auto d = dropIncompleteQueries(fixtures::plantedTypologyPanel(c, 7));
    CHECK(d.panel.queryCount() == 30);
    std::vector<std::string> expected;
    for (const auto& q : c.queries()) {
        const auto& inc = incompleteReferenceQueryIds();
        if (std::find(inc.begin(), inc.end(), q.id) != inc.end()) expected.push_back(q.id);
    }
    CHECK(d.dropped == expected);
}

TEST_CASE("pearson identities") {
    auto p = panelFrom({{1.0, 1.0, 99.0}, {2.0, 2.0, 98.0}, {5.0, 5.0, 95.0}, {3.0, 3.0, 97.0}});
    const auto m = pearsonMatrix(p);
    CHECK(*m.r(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*m.r(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(*m.r(0, 0) == 1.0);
    CHECK(m.pairs(0, 2) == 4);
}

TEST_CASE("pearson with a masked cell matches the direct formula") {
    const std::vector<std::vector<std::optional<double>>> rows{
        {12.0, 40.0, 88.0}, {35.0, std::nullopt, 61.0}, {50.0, 52.0, 47.0}, {71.0, 90.0, 20.0}, {100.0, 63.0, 5.0}};
    const auto m = pearsonMatrix(panelFrom(rows));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            oracle::Column x, y;
            for (const auto& r : rows) {
                x.push_back(r[i]);
                y.push_back(r[j]);
            }
            const auto o = oracle::pearson(x, y);
            CHECK(m.pairs(i, j) == o.n);
            REQUIRE(m.r(i, j).has_value() == o.r.has_value());
            CHECK(std::fabs(*m.r(i, j) - *o.r) <= 1e-12);
            CHECK(m.r(i, j) == m.r(j, i));
        }
    }
    CHECK(m.pairs(0, 1) == 4);
}

TEST_CASE("pearson missing markers") {
    auto p = panelFrom({{1.0, 5.0, std::nullopt}, {2.0, 5.0, std::nullopt}, {3.0, 5.0, 4.0}});
    const auto m = pearsonMatrix(p);
    CHECK_FALSE(m.r(0, 1).has_value());  // constant column
    CHECK_FALSE(m.r(1, 1).has_value());
    CHECK_FALSE(m.r(0, 2).has_value());  // one complete pair
    CHECK(m.pairs(0, 2) == 1);
    CHECK(*m.r(0, 0) == 1.0);
    CHECK_THROWS_AS(pearsonMatrix(panelFrom({{1.0, 2.0}})), Error);
}

TEST_CASE("band classification") {
    CHECK(classifyBand(0.5) == Band::Moderate);
    CHECK(classifyBand(0.0) == Band::Low);
    CHECK(classifyBand(-0.7) == Band::High);
    CHECK(classifyBand(0.4) == Band::Moderate);
    CHECK(classifyBand(0.39999) == Band::Low);
    CHECK(classifyBand(0.6) == Band::High);
    CHECK(classifyBand(-0.6) == Band::High);
    CHECK(classifyBand(1.0) == Band::High);
    CHECK(codeOf([] { classifyBand(1.1); }) == ErrorCode::OutOfRange);
    CHECK(codeOf([] { classifyBand(std::nan("")); }) == ErrorCode::OutOfRange);
}

TEST_CASE("pca: rank-one structure") {
    auto p = panelFrom({{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}, {7.0, 14.0}});
    const auto r = pca(p, 1);
    CHECK(r.components[0].explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.components[0].loadings[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("pca: 4x3 matrix against power iteration") {
    const oracle::Matrix data{{2.0, 8.0, 1.0}, {4.0, 5.0, 3.0}, {7.0, 1.0, 2.0}, {9.0, 6.0, 8.0}};
    std::vector<std::vector<std::optional<double>>> rows;
    for (const auto& r : data) rows.push_back({r[0], r[1], r[2]});
    const auto got = pca(panelFrom(rows), 3);
    const auto want = oracle::pca(data, 3, oracle::Solver::Power);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(got.components[c].explained_variance_ratio == doctest::Approx(want.ratios[c]).epsilon(1e-6));
        for (std::size_t q = 0; q < 3; ++q) CHECK(std::fabs(got.components[c].loadings[q] - want.loadings[c][q]) < 1e-6);
        for (std::size_t s = 0; s < 4; ++s) CHECK(std::fabs(got.components[c].scores[s] - want.scores[c][s]) < 1e-6);
    }
    CHECK(got.max_components == 3);
}

TEST_CASE("pca invariants on a random panel") {
    fixtures::Rng rng(5);
    const std::size_t ns = 20, nq = 6;
    std::vector<std::vector<std::optional<double>>> rows(ns);
    for (auto& r : rows) {
        const double f = rng.normal();
        for (std::size_t q = 0; q < nq; ++q) r.push_back(std::clamp(50.0 + 10.0 * (0.5 * f + rng.normal()) * (q + 1) / 3.0, 0.0, 100.0));
    }
    const auto p = panelFrom(rows);
    const auto r = pca(p, nq);

    double total = 0.0;
    for (std::size_t c = 0; c < nq; ++c) {
        total += r.components[c].explained_variance_ratio;
        if (c) CHECK(r.components[c].explained_variance_ratio <= r.components[c - 1].explained_variance_ratio);
        for (std::size_t d = 0; d < nq; ++d) {
            double dotp = 0.0;
            for (std::size_t q = 0; q < nq; ++q) dotp += r.components[c].loadings[q] * r.components[d].loadings[q];
            CHECK(std::fabs(dotp - (c == d ? 1.0 : 0.0)) < 1e-8);
        }
        // Sign convention.
        std::size_t pivot = 0;
        for (std::size_t q = 1; q < nq; ++q)
            if (std::fabs(r.components[c].loadings[q]) > std::fabs(r.components[c].loadings[pivot])) pivot = q;
        CHECK(r.components[c].loadings[pivot] > 0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

    // Reconstruction from all components.
    const auto z = standardize(p);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t q = 0; q < nq; ++q) {
            double acc = 0.0;
            for (std::size_t c = 0; c < nq; ++c) acc += r.components[c].scores[s] * r.components[c].loadings[q];
            CHECK(std::fabs(acc - z[s * nq + q]) < 1e-6);
        }

    // Scaling a column changes nothing.
    auto scaled_rows = rows;
    for (auto& row : scaled_rows) row[2] = *row[2] * 0.37;
    const auto rs = pca(panelFrom(scaled_rows), nq);
    for (std::size_t c = 0; c < nq; ++c) {
        CHECK(std::fabs(rs.components[c].explained_variance_ratio - r.components[c].explained_variance_ratio) < 1e-9);
        for (std::size_t q = 0; q < nq; ++q) CHECK(std::fabs(rs.components[c].loadings[q] - r.components[c].loadings[q]) < 1e-9);
        for (std::size_t s = 0; s < ns; ++s) CHECK(std::fabs(rs.components[c].scores[s] - r.components[c].scores[s]) < 1e-9);
    }

    // Flipping a column flips only its loading entries (after the convention).
    auto flipped_rows = rows;
    for (auto& row : flipped_rows) row[4] = 100.0 - *row[4];
    const auto rf = pca(panelFrom(flipped_rows), nq);
    for (std::size_t c = 0; c < nq; ++c) {
        CHECK(std::fabs(rf.components[c].explained_variance_ratio - r.components[c].explained_variance_ratio) < 1e-9);
        // The whole vector may also flip when the pivot entry moves; compare up to a global sign.
        double same = 0.0, opposite = 0.0;
        for (std::size_t q = 0; q < nq; ++q) {
            const double expect = q == 4 ? -r.components[c].loadings[q] : r.components[c].loadings[q];
            same = std::max(same, std::fabs(rf.components[c].loadings[q] - expect));
            opposite = std::max(opposite, std::fabs(rf.components[c].loadings[q] + expect));
        }
        CHECK(std::min(same, opposite) < 1e-9);
    }

    // Determinism.
    const auto again = pca(p, nq);
    for (std::size_t c = 0; c < nq; ++c) CHECK(again.components[c].loadings == r.components[c].loadings);
}

TEST_CASE("pca preconditions") {
    auto p = panelFrom({{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}});
    try {
        pca(p, 1);
        FAIL("expected ConstantColumn");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConstantColumn);
        CHECK(e.detail() == "q1");
    }
    auto ok = panelFrom({{1.0, 5.0}, {2.0, 3.0}, {3.0, 4.0}});
    CHECK(codeOf([&] { pca(ok, 3); }) == ErrorCode::KTooLarge);
    CHECK(codeOf([&] { pca(ok, 0); }) == ErrorCode::KTooLarge);
    auto two_states = panelFrom({{1.0, 5.0, 2.0}, {2.0, 3.0, 1.0}});
    CHECK(codeOf([&] { pca(two_states, 2); }) == ErrorCode::KTooLarge);
    CHECK_NOTHROW(pca(two_states, 1));
    auto missing = panelFrom({{1.0, std::nullopt}, {2.0, 3.0}, {3.0, 4.0}});
    CHECK(codeOf([&] { pca(missing, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("degenerate eigenvalues are flagged") {
    // Two uncorrelated, equal-variance columns: both eigenvalues equal 1.
    auto p = panelFrom({{4.0, 4.0}, {2.0, 4.0}, {4.0, 2.0}, {2.0, 2.0}});
    const auto r = pca(p, 2);
    CHECK(r.components[0].unstable);
    CHECK(r.components[1].unstable);
    auto q = panelFrom({{1.0, 2.0}, {2.0, 1.0}, {3.0, 5.0}, {4.0, 3.0}});
    CHECK_FALSE(pca(q, 2).components[0].unstable);
}

TEST_CASE("interpretation threshold") {
    PcaResult r;
    r.query_ids = {"a", "b", "c", "d"};
    r.states = {"US-AL", "US-AK", "US-AZ"};
    Component c;
    c.loadings = {0.15, -0.35, 0.2, 0.9};
    c.scores = {0.5, 2.0, -1.0};
    r.components.push_back(c);
    const auto in = interpretComponent(r, 0, 0.2, 2);
    REQUIRE(in.salient.size() == 3);
    CHECK(in.salient[0].query_id == "d");
    CHECK(in.salient[1].query_id == "b");
    CHECK(in.salient[1].loading == -0.35);
    CHECK(in.salient[2].query_id == "c");
    REQUIRE(in.top_states.size() == 2);
    CHECK(in.top_states[0].state == "US-AK");
    CHECK(in.top_states[1].state == "US-AL");
    CHECK(codeOf([&] { interpretComponent(r, 1); }) == ErrorCode::BadIndex);
}

TEST_CASE("planted typology: component 1 names the planted queries and states") {
    const Catalog c = loadCatalog();
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 42ULL}) {
        const auto d = dropIncompleteQueries(fixtures::plantedTypologyPanel(c, seed));
        const auto r = pca(d.panel, 2);
        const auto in = interpretComponent(r, 0, 0.2, 5);
        std::vector<std::string> salient;
        for (const auto& s : in.salient) salient.push_back(s.query_id);
        std::sort(salient.begin(), salient.end());
        auto planted = fixtures::plantedQueries();
        std::sort(planted.begin(), planted.end());
        CHECK(salient == planted);
        std::vector<std::string> top;
        for (const auto& s : in.top_states) top.push_back(s.state);
        CHECK(top == fixtures::plantedStates());
        CHECK(in.salient[0].query_id == "stimulus-check");
    }
}
