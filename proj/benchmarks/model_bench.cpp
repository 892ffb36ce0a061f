// SPDX-License-Identifier: Apache-2.0
#include "rtad/model.hpp"
#include "rtad/relgraph.hpp"
#include "rtad/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace rtad;

std::vector<Mat> windows_of(std::size_t metrics, std::size_t window, std::size_t count) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Mat> out;
    for (std::size_t i = 0; i < count; ++i) {
        Mat w(metrics, window);
        for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
        out.push_back(std::move(w));
    }
    return out;
}

ModelConfig config_for(std::size_t metrics) {
    ModelConfig c;
    c.metrics = metrics;
    return c;
}

// Args: metrics, batch size.
void BM_Embed(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto b = static_cast<std::size_t>(state.range(1));
    RTModel model(config_for(m), 1);
    auto windows = windows_of(m, model.config().window, b);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.embed(windows));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_Embed)->Args({8, 128})->Args({38, 128})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto b = static_cast<std::size_t>(state.range(1));
    RTModel model(config_for(m), 1);
    auto windows = windows_of(m, model.config().window, b);
    std::vector<int> y(b, 0);
    std::mt19937_64 rng(2);
    for (auto _ : state) {
        model.zero_grad();
        benchmark::DoNotOptimize(model.train_step(windows, y, rng));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_TrainStep)->Args({8, 128})->Args({38, 128})->Unit(benchmark::kMillisecond);

void BM_Attention(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    RTModel model(config_for(m), 1);
    Mat window = windows_of(m, model.config().window, 1).front();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.attention(window));
    }
}
BENCHMARK(BM_Attention)->Arg(8)->Arg(38);

void BM_RawScores(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    MetricMatrix series = generate_synthetic(default_synth_config(8, n, 3));
    RTModel model(config_for(8), 1);
    WindowBatch batch = make_windows(series, model.config().window);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.raw_scores(batch));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_RawScores)->Arg(2000)->Unit(benchmark::kMillisecond);

} // namespace
