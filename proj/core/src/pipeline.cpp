// SPDX-License-Identifier: Apache-2.0
#include "rtad/pipeline.hpp"

#include "rtad/error.hpp"

namespace rtad {

MetricMatrix Detector::normalize(const MetricMatrix& raw) const {
    if (raw.metrics() != minmax.min.size()) {
        throw ValidationError("series has " + std::to_string(raw.metrics()) +
                              " metrics, detector expects " + std::to_string(minmax.min.size()));
    }
    return minmax_normalize(raw, minmax).first;
}

ScoreSeries Detector::score(const MetricMatrix& raw) const {
    return score_series(model, normalizer, normalize(raw));
}

LocalizationReport Detector::localize(LocalizeMethod method, const MetricMatrix& raw,
                                      std::size_t start, std::size_t end) const {
    return rank_metrics(method, model, attention_normal, moments, normalize(raw), start, end);
}

void TrainConfig::validate() const {
    model.validate();
    pu.validate();
    if (train_stride == 0) {
        throw ConfigError("train_stride must be positive");
    }
}

WindowBatch training_windows(const MetricMatrix& normalized, const TrainConfig& cfg) {
    return make_windows(normalized, cfg.model.window, cfg.train_stride);
}

namespace {

TrainResult assemble(PuResult fit, const MetricMatrix& normalized, const MinMaxStats& minmax,
                     const WindowBatch& windows) {
    TrainResult out;
    Detector& d = out.detector;
    d.model = std::move(fit.model);
    d.normalizer = fit.normalizer;
    d.minmax = minmax;
    d.moments = metric_moments(normalized);
    d.attention_normal = mean_attention(d.model, windows);
    d.metric_names = normalized.metric_names;
    out.report = std::move(fit.report);
    return out;
}

} // namespace

SweepContext prepare_sweep(const MetricMatrix& raw_train, const TrainConfig& cfg,
                           const EpochCallback& on_epoch) {
    cfg.validate();
    if (raw_train.metrics() != cfg.model.metrics) {
        throw ConfigError("model configured for " + std::to_string(cfg.model.metrics) +
                          " metrics but the training data has " +
                          std::to_string(raw_train.metrics()));
    }
    SweepContext ctx;
    std::tie(ctx.normalized, ctx.minmax) = minmax_normalize(raw_train);
    ctx.windows = training_windows(ctx.normalized, cfg);
    ctx.phase_one = pu_phase_one(ctx.windows, cfg.model, cfg.pu, on_epoch);
    return ctx;
}

TrainResult finish_detector(const SweepContext& ctx, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
    PuResult fit = pu_phase_three(ctx.phase_one, ctx.windows, cfg.pu, on_epoch);
    return assemble(std::move(fit), ctx.normalized, ctx.minmax, ctx.windows);
}

TrainResult train_detector(const MetricMatrix& raw_train, const TrainConfig& cfg,
                           const EpochCallback& on_epoch) {
    SweepContext ctx = prepare_sweep(raw_train, cfg, on_epoch);
    return finish_detector(ctx, cfg, on_epoch);
}

} // namespace rtad
