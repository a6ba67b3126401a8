#include "infoveil/geo.hpp"

#include <algorithm>
#include <array>

#include "infoveil/error.hpp"

namespace infoveil::geo {

namespace {

using R = Region;

constexpr std::array<GeoRef, kGeographyCount> kTable{{
    {"US-AK", "Alaska", R::West, "Pacific"},
    {"US-AL", "Alabama", R::South, "East South Central"},
    {"US-AR", "Arkansas", R::South, "West South Central"},
    {"US-AZ", "Arizona", R::West, "Mountain"},
    {"US-CA", "California", R::West, "Pacific"},
    {"US-CO", "Colorado", R::West, "Mountain"},
    {"US-CT", "Connecticut", R::Northeast, "New England"},
    {"US-DC", "District of Columbia", R::South, "South Atlantic"},
    {"US-DE", "Delaware", R::South, "South Atlantic"},
    {"US-FL", "Florida", R::South, "South Atlantic"},
    {"US-GA", "Georgia", R::South, "South Atlantic"},
    {"US-HI", "Hawaii", R::West, "Pacific"},
    {"US-IA", "Iowa", R::Midwest, "West North Central"},
    {"US-ID", "Idaho", R::West, "Mountain"},
    {"US-IL", "Illinois", R::Midwest, "East North Central"},
    {"US-IN", "Indiana", R::Midwest, "East North Central"},
    {"US-KS", "Kansas", R::Midwest, "West North Central"},
    {"US-KY", "Kentucky", R::South, "East South Central"},
    {"US-LA", "Louisiana", R::South, "West South Central"},
    {"US-MA", "Massachusetts", R::Northeast, "New England"},
    {"US-MD", "Maryland", R::South, "South Atlantic"},
    {"US-ME", "Maine", R::Northeast, "New England"},
    {"US-MI", "Michigan", R::Midwest, "East North Central"},
    {"US-MN", "Minnesota", R::Midwest, "West North Central"},
    {"US-MO", "Missouri", R::Midwest, "West North Central"},
    {"US-MS", "Mississippi", R::South, "East South Central"},
    {"US-MT", "Montana", R::West, "Mountain"},
    {"US-NC", "North Carolina", R::South, "South Atlantic"},
    {"US-ND", "North Dakota", R::Midwest, "West North Central"},
    {"US-NE", "Nebraska", R::Midwest, "West North Central"},
    {"US-NH", "New Hampshire", R::Northeast, "New England"},
    {"US-NJ", "New Jersey", R::Northeast, "Middle Atlantic"},
    {"US-NM", "New Mexico", R::West, "Mountain"},
    {"US-NV", "Nevada", R::West, "Mountain"},
    {"US-NY", "New York", R::Northeast, "Middle Atlantic"},
    {"US-OH", "Ohio", R::Midwest, "East North Central"},
    {"US-OK", "Oklahoma", R::South, "West South Central"},
    {"US-OR", "Oregon", R::West, "Pacific"},
    {"US-PA", "Pennsylvania", R::Northeast, "Middle Atlantic"},
    {"US-RI", "Rhode Island", R::Northeast, "New England"},
    {"US-SC", "South Carolina", R::South, "South Atlantic"},
    {"US-SD", "South Dakota", R::Midwest, "West North Central"},
    {"US-TN", "Tennessee", R::South, "East South Central"},
    {"US-TX", "Texas", R::South, "West South Central"},
    {"US-UT", "Utah", R::West, "Mountain"},
    {"US-VA", "Virginia", R::South, "South Atlantic"},
    {"US-VT", "Vermont", R::Northeast, "New England"},
    {"US-WA", "Washington", R::West, "Pacific"},
    {"US-WI", "Wisconsin", R::Midwest, "East North Central"},
    {"US-WV", "West Virginia", R::South, "South Atlantic"},
    {"US-WY", "Wyoming", R::West, "Mountain"},
}};

constexpr std::array<Region, kRegionCount> kRegions{R::Northeast, R::Midwest, R::South, R::West};

}  // namespace

std::string_view toString(Region r) noexcept {
    switch (r) {
        case Region::Northeast: return "Northeast";
        case Region::Midwest: return "Midwest";
        case Region::South: return "South";
        case Region::West: return "West";
    }
    return "South";
}

std::span<const GeoRef> table() { return kTable; }

const std::vector<std::string>& stateCodes() {
    static const std::vector<std::string> codes = [] {
        std::vector<std::string> out;
        for (const auto& g : kTable) out.emplace_back(g.code);
        return out;
    }();
    return codes;
}

const GeoRef* find(std::string_view code) {
    const auto it = std::lower_bound(kTable.begin(), kTable.end(), code,
                                     [](const GeoRef& g, std::string_view c) { return g.code < c; });
    if (it == kTable.end() || it->code != code) return nullptr;
    return &*it;
}

bool isStateCode(std::string_view code) { return find(code) != nullptr; }

bool isValidGeo(std::string_view code) { return code == "US" || isStateCode(code); }

RegionDivision regionOf(std::string_view code) {
    const GeoRef* g = find(code);
    if (!g) throw Error(ErrorCode::UnknownGeography, "unknown geography '" + std::string(code) + "'", std::string(code));
    return {g->region, g->division};
}

RegionMatrix regionalAggregate(const StatePanel& panel, Statistic statistic) {
    std::vector<std::size_t> region_of(panel.stateCount());
    for (std::size_t s = 0; s < panel.stateCount(); ++s) {
        region_of[s] = static_cast<std::size_t>(regionOf(panel.states()[s]).region);
    }

    RegionMatrix out;
    out.regions.assign(kRegions.begin(), kRegions.end());
    out.query_ids = panel.queryIds();
    out.values.assign(kRegionCount * panel.queryCount(), std::nullopt);

    std::vector<double> bucket;
    for (std::size_t q = 0; q < panel.queryCount(); ++q) {
        for (std::size_t r = 0; r < kRegionCount; ++r) {
            bucket.clear();
            for (std::size_t s = 0; s < panel.stateCount(); ++s) {
                if (region_of[s] == r && panel.at(s, q)) bucket.push_back(*panel.at(s, q));
            }
            if (bucket.empty()) continue;
            double value = 0.0;
            if (statistic == Statistic::Mean) {
                for (double v : bucket) value += v;
                value /= static_cast<double>(bucket.size());
            } else {
                std::sort(bucket.begin(), bucket.end());
                const std::size_t m = bucket.size() / 2;
                value = bucket.size() % 2 ? bucket[m] : 0.5 * (bucket[m - 1] + bucket[m]);
            }
            out.values[r * panel.queryCount() + q] = value;
        }
    }
    return out;
}

Choropleth choropleth(const StatePanel& panel, std::string_view query_id) {
    const auto q = panel.queryIndex(query_id);
    if (!q) throw Error(ErrorCode::NotFound, "query '" + std::string(query_id) + "' not in panel", std::string(query_id));
    Choropleth out{std::string(query_id), panel.window(), {}};
    out.values.reserve(panel.stateCount());
    for (std::size_t s = 0; s < panel.stateCount(); ++s) out.values.push_back({panel.states()[s], panel.at(s, *q)});
    return out;
}

}  // namespace infoveil::geo
