#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "infoveil/query.hpp"
#include "infoveil/series.hpp"
#include "infoveil/snapshot.hpp"

/// Planted-ground-truth generators. Every fixture is built from raw shares
/// pushed through rsv::quantizeRsv, so the pipeline sees data normalised
/// exactly as the live source normalises it.
namespace infoveil::fixtures {

/// Portable sampling on top of mt19937_64 (standard distributions are not
/// reproducible across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                     // [0, 1)
    double uniform(double lo, double hi);
    int uniformInt(int lo, int hi);       // inclusive
    double normal();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Planted typology -------------------------------------------------------

/// States carrying the planted component-1 pattern, strongest first.
const std::vector<std::string>& plantedStates();
/// Query ids in the planted salient set: the first two load positively, the
/// last negatively.
const std::vector<std::string>& plantedQueries();

/// 51-state window panel over every catalog query. The nine reference
/// queries miss a few states; the remaining queries carry the planted
/// pattern on plantedQueries() and mutually orthogonal noise elsewhere.
StatePanel plantedTypologyPanel(const Catalog& catalog, std::uint64_t seed);

/// Same construction restricted to a complete panel over the given query count.
StatePanel plantedTypologyPanel(std::size_t n_queries, std::uint64_t seed);

// Series fixtures --------------------------------------------------------

/// 224 Sunday weeks from 2016-01-03 to 2020-04-12.
std::vector<Date> nationalWeeks();
/// Change targets (query id, January mean, March mean) planted in the
/// national set.
struct ChangeTarget {
    std::string query_id;
    double january_mean;
    double march_mean;
};
const std::vector<ChangeTarget>& changeTargets();

/// Daily series (Mar 1 - Apr 15 2020) whose first value >= 50 falls on `crossing`.
RsvSeries crossingSeries(std::string query_id, Date crossing);

/// Weekly AR(1) base and a copy lagged by `lag` periods plus Gaussian noise.
struct LagPair {
    TimeSeries query;
    TimeSeries indicator;
    int planted_lag = 0;
};
LagPair plantedLagPair(Rng& rng, std::size_t n, int lag, double phi, double noise_ratio);

/// Full snapshot: national weekly set (with change targets and the
/// unemployment query), daily NPI crossing series, state weekly set, planted
/// typology window panel, synthetic DOL-format unemployment claims and
/// Medicaid applications, bundled events.
Snapshot referenceSnapshot(const Catalog& catalog, std::uint64_t seed, std::string created_at = "2020-04-16T00:00:00Z");

/// Writes the reference snapshot's inputs in fixture CSV layout.
void writeFixtureDirectory(const Snapshot& snapshot, const std::filesystem::path& dir);

}  // namespace infoveil::fixtures
