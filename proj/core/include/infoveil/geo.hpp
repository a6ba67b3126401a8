#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infoveil/series.hpp"

namespace infoveil::geo {

enum class Region { Northeast, Midwest, South, West };

inline constexpr std::size_t kRegionCount = 4;
inline constexpr std::size_t kGeographyCount = 51;

std::string_view toString(Region r) noexcept;

struct GeoRef {
    std::string_view code;  // "US-XX"
    std::string_view name;
    Region region;
    std::string_view division;
};

/// 50 states plus DC, ordered by code. DC sits in South / South Atlantic.
std::span<const GeoRef> table();
/// Codes of table() in order.
const std::vector<std::string>& stateCodes();

const GeoRef* find(std::string_view code);
bool isStateCode(std::string_view code);
/// "US" or a known state code.
bool isValidGeo(std::string_view code);

struct RegionDivision {
    Region region;
    std::string_view division;
};

/// Throws Error(UnknownGeography).
RegionDivision regionOf(std::string_view code);

enum class Statistic { Mean, Median };

struct RegionMatrix {
    std::vector<Region> regions;  // Northeast, Midwest, South, West
    std::vector<std::string> query_ids;
    std::vector<std::optional<double>> values;  // regions x queries, row-major

    const std::optional<double>& at(std::size_t region, std::size_t query) const {
        return values[region * query_ids.size() + query];
    }
};

/// Per-region statistic over present cells only; a region with no present
/// cell for a query yields a missing value. Throws UnknownGeography.
RegionMatrix regionalAggregate(const StatePanel& panel, Statistic statistic);

struct ChoroplethValue {
    std::string geo;
    std::optional<double> value;
};

struct Choropleth {
    std::string query_id;
    DateRange window;
    std::vector<ChoroplethValue> values;
};

/// One entry per panel state, in panel order. Throws NotFound for an unknown query.
Choropleth choropleth(const StatePanel& panel, std::string_view query_id);

}  // namespace infoveil::geo
