#include "infoveil/rsv.hpp"

#include <cmath>
#include <set>

#include "infoveil/error.hpp"

namespace infoveil::rsv {

std::vector<QuantizedValue> quantizeRsv(const RawSharePanel& panel) {
    if (panel.entries.empty()) throw Error(ErrorCode::EmptyPanel, "cannot quantize an empty share panel");

    std::set<std::string> keys;
    std::vector<double> shares;
    shares.reserve(panel.entries.size());
    double max_share = 0.0;
    for (const auto& e : panel.entries) {
        if (!keys.insert(e.key).second) throw Error(ErrorCode::InvalidArgument, "duplicate panel key", e.key);
        if (!(e.total_search_count > 0.0) || !std::isfinite(e.total_search_count)) {
            throw Error(ErrorCode::InvalidArgument, "total search count must be positive", e.key);
        }
        if (!(e.query_search_count >= 0.0) || !std::isfinite(e.query_search_count)) {
            throw Error(ErrorCode::InvalidArgument, "query search count must be non-negative", e.key);
        }
        const double share = e.query_search_count / e.total_search_count;
        shares.push_back(share);
        if (share > max_share) max_share = share;
    }

    std::vector<QuantizedValue> out;
    out.reserve(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i) {
        int value = 0;
        if (max_share > 0.0) {
            // Exact 100 for every entry tied with the maximum.
            value = shares[i] == max_share ? 100 : static_cast<int>(std::round(100.0 * (shares[i] / max_share)));
        }
        out.push_back({panel.entries[i].key, value});
    }
    return out;
}

std::vector<int> quantizeShares(const std::vector<double>& shares) {
    RawSharePanel panel;
    panel.entries.reserve(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i) {
        panel.entries.push_back({std::to_string(i), shares[i], 1.0});
    }
    std::vector<int> out;
    out.reserve(shares.size());
    for (const auto& q : quantizeRsv(panel)) out.push_back(q.rsv);
    return out;
}

}  // namespace infoveil::rsv
