#include <doctest.h>

#include <cmath>
#include <set>

#include "infoveil/error.hpp"
#include "infoveil/fixtures.hpp"
#include "infoveil/geo.hpp"
#include "oracles.hpp"

using namespace infoveil;
using namespace infoveil::geo;

TEST_CASE("reference table") {
    CHECK(table().size() == kGeographyCount);
    CHECK(stateCodes().size() == 51);
    std::set<std::string> codes(stateCodes().begin(), stateCodes().end());
    CHECK(codes.size() == 51);
    CHECK(codes.count("US-DC") == 1);
    CHECK(std::is_sorted(stateCodes().begin(), stateCodes().end()));
    std::size_t per_region[4] = {};
    for (const auto& g : table()) {
        ++per_region[static_cast<int>(g.region)];
        CHECK(!g.division.empty());
        CHECK(!g.name.empty());
    }
    // Census: 9 Northeast, 12 Midwest, 16 South + DC, 13 West.
    CHECK(per_region[0] == 9);
    CHECK(per_region[1] == 12);
    CHECK(per_region[2] == 17);
    CHECK(per_region[3] == 13);
}

TEST_CASE("region lookup") {
    CHECK(regionOf("US-LA").region == Region::South);
    CHECK(regionOf("US-NY").region == Region::Northeast);
    CHECK(regionOf("US-DC").region == Region::South);
    CHECK(regionOf("US-DC").division == "South Atlantic");
    CHECK(regionOf("US-CA").region == Region::West);
    CHECK(regionOf("US-OH").region == Region::Midwest);
    try {
        regionOf("US-ZZ");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownGeography);
    }
    CHECK(isValidGeo("US"));
    CHECK(isValidGeo("US-WY"));
    CHECK_FALSE(isValidGeo("US-ZZ"));
    CHECK_FALSE(isStateCode("US"));
}

TEST_CASE("regional aggregation") {
    StatePanel p(stateCodes(), {"a", "b"}, parseWindow("2020-03-01:2020-04-15"));
    fixtures::Rng rng(17);
    for (std::size_t s = 0; s < p.stateCount(); ++s) {
        const bool south = regionOf(p.states()[s]).region == Region::South;
        p.set(s, 0, south ? 80.0 : rng.uniform(0, 100));
        if (!south) p.set(s, 1, static_cast<double>(rng.uniformInt(0, 100)));
    }
    const auto mean = regionalAggregate(p, Statistic::Mean);
    CHECK(mean.regions.size() == 4);
    CHECK(*mean.at(2, 0) == 80.0);
    CHECK_FALSE(mean.at(2, 1).has_value());

    const auto median = regionalAggregate(p, Statistic::Median);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t q = 0; q < 2; ++q) {
            std::vector<double> vals;
            double sum = 0;
            for (std::size_t s = 0; s < p.stateCount(); ++s) {
                if (static_cast<std::size_t>(regionOf(p.states()[s]).region) != r || !p.at(s, q)) continue;
                vals.push_back(*p.at(s, q));
                sum += *p.at(s, q);
            }
            if (vals.empty()) {
                CHECK_FALSE(median.at(r, q).has_value());
                continue;
            }
            CHECK(*median.at(r, q) == oracle::median(vals));
            CHECK(std::fabs(*mean.at(r, q) - sum / static_cast<double>(vals.size())) <= 1e-12);
        }
    }

    StatePanel bad({"US-ZZ"}, {"a"}, parseWindow("2020-03"));
    CHECK_THROWS_AS(regionalAggregate(bad, Statistic::Mean), Error);
}

TEST_CASE("choropleth export") {
    StatePanel p({"US-AL", "US-AK"}, {"a"}, parseWindow("2020-03"));
    p.set(0, 0, 42.0);
    const auto c = choropleth(p, "a");
    CHECK(c.query_id == "a");
    REQUIRE(c.values.size() == 2);
    CHECK(*c.values[0].value == 42.0);
    CHECK_FALSE(c.values[1].value.has_value());
    CHECK_THROWS_AS(choropleth(p, "zzz"), Error);
}
