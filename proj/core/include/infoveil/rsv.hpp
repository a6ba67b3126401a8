#pragma once

#include <string>
#include <vector>

namespace infoveil::rsv {

enum class Axis { TimeWithinGeo, GeoWithinWindow };

struct RawShareEntry {
    std::string key;  // ISO date or geography code, depending on the axis
    double query_search_count = 0.0;
    double total_search_count = 1.0;
};

struct RawSharePanel {
    Axis axis = Axis::TimeWithinGeo;
    std::vector<RawShareEntry> entries;
};

struct QuantizedValue {
    std::string key;
    int rsv = 0;

    bool operator==(const QuantizedValue&) const = default;
};

/// share_i = query_i / total_i, rsv_i = round(100 * share_i / max share),
/// rounding half away from zero. All-zero shares quantize to all zeros.
/// Throws EmptyPanel, or InvalidArgument for duplicate keys, negative counts
/// or non-positive totals.
std::vector<QuantizedValue> quantizeRsv(const RawSharePanel& panel);

/// Convenience for share vectors with unit totals.
std::vector<int> quantizeShares(const std::vector<double>& shares);

}  // namespace infoveil::rsv
