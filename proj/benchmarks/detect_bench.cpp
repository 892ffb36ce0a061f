// SPDX-License-Identifier: Apache-2.0
#include "rtad/detect.hpp"
#include "rtad/localize.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace rtad;

struct Scored {
    std::vector<double> scores;
    std::vector<int> truth;
};

// Anomalies in runs of 25 covering about 5% of the series, scored higher on average.
Scored scored_series(std::size_t n) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scored s;
    s.scores.resize(n);
    s.truth.assign(n, 0);
    for (std::size_t start = 200; start + 25 < n; start += 500) {
        for (std::size_t t = start; t < start + 25; ++t) s.truth[t] = 1;
    }
    for (std::size_t t = 0; t < n; ++t) s.scores[t] = 0.6 * u(rng) + (s.truth[t] ? 0.4 : 0.0);
    return s;
}

void BM_GridSearch(benchmark::State& state) {
    Scored s = scored_series(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(grid_search_threshold(s.scores, s.truth));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * s.scores.size()));
}
BENCHMARK(BM_GridSearch)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_PointAdjust(benchmark::State& state) {
    Scored s = scored_series(static_cast<std::size_t>(state.range(0)));
    std::vector<int> pred(s.scores.size());
    for (std::size_t t = 0; t < pred.size(); ++t) pred[t] = s.scores[t] > 0.55;
    for (auto _ : state) {
        benchmark::DoNotOptimize(point_adjust(pred, s.truth));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pred.size()));
}
BENCHMARK(BM_PointAdjust)->Arg(100000);

void BM_CorrelationChange(benchmark::State& state) {
    const auto m = state.range(0);
    Mat a = Mat::Random(m, m).cwiseAbs();
    Mat n = Mat::Random(m, m).cwiseAbs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rank_descending(correlation_change(n, a)));
    }
}
BENCHMARK(BM_CorrelationChange)->Arg(8)->Arg(38);

} // namespace
