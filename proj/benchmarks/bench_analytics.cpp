#include <benchmark/benchmark.h>

#include <algorithm>

#include "infoveil/analytics.hpp"
#include "infoveil/fixtures.hpp"
#include "infoveil/geo.hpp"
#include "infoveil/leadlag.hpp"
#include "infoveil/rsv.hpp"

using namespace infoveil;

namespace {

StatePanel randomPanel(std::size_t nq, double missing, std::uint64_t seed) {
    fixtures::Rng rng(seed);
    std::vector<std::string> ids;
    for (std::size_t q = 0; q < nq; ++q) ids.push_back("q" + std::to_string(q));
    StatePanel p(geo::stateCodes(), ids, parseWindow("2020-03-01:2020-04-15"));
    for (std::size_t s = 0; s < p.stateCount(); ++s) {
        const double f = rng.normal();
        for (std::size_t q = 0; q < nq; ++q) {
            if (rng.uniform() < missing) continue;
            p.set(s, q, std::clamp(50.0 + 10.0 * (f * (q % 3) + rng.normal()), 0.0, 100.0));
        }
    }
    return p;
}

void BM_PearsonMatrix(benchmark::State& state) {
    const auto p = randomPanel(static_cast<std::size_t>(state.range(0)), 0.05, 1);
    for (auto _ : state) benchmark::DoNotOptimize(analytics::pearsonMatrix(p));
}
BENCHMARK(BM_PearsonMatrix)->Arg(10)->Arg(30)->Arg(39);

void BM_Pca(benchmark::State& state) {
    const auto p = randomPanel(static_cast<std::size_t>(state.range(0)), 0.0, 2);
    for (auto _ : state) benchmark::DoNotOptimize(analytics::pca(p, 5));
}
BENCHMARK(BM_Pca)->Arg(10)->Arg(30);

void BM_BestLag(benchmark::State& state) {
    fixtures::Rng rng(3);
    const auto pair = fixtures::plantedLagPair(rng, static_cast<std::size_t>(state.range(0)), 2, 0.8, 0.25);
    for (auto _ : state) benchmark::DoNotOptimize(leadlag::bestLag(pair.query, pair.indicator, -8, 8));
}
BENCHMARK(BM_BestLag)->Arg(150)->Arg(224);

void BM_QuantizeRsv(benchmark::State& state) {
    fixtures::Rng rng(4);
    rsv::RawSharePanel panel{rsv::Axis::TimeWithinGeo, {}};
    for (int i = 0; i < state.range(0); ++i)
        panel.entries.push_back({"k" + std::to_string(i), rng.uniform(0.0, 1e4), rng.uniform(1e6, 1e7)});
    for (auto _ : state) benchmark::DoNotOptimize(rsv::quantizeRsv(panel));
}
BENCHMARK(BM_QuantizeRsv)->Arg(51)->Arg(224);

}  // namespace

BENCHMARK_MAIN();
