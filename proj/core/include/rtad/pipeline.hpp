// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/detect.hpp"
#include "rtad/ingest.hpp"
#include "rtad/lcvae.hpp"
#include "rtad/localize.hpp"
#include "rtad/model.hpp"
#include "rtad/pulearn.hpp"

#include <string>
#include <vector>

namespace rtad {

/// Everything needed to score and localize new data.
struct Detector {
    RTModel model;
    ScoreNormalizer normalizer;
    MinMaxStats minmax;          // raw -> [0, 1] scaling fitted on training data
    MetricMoments moments;       // of the normalised training series
    Mat attention_normal;        // mean attention over the training windows
    std::vector<std::string> metric_names;

    std::size_t window() const { return model.config().window; }

    /// Applies the stored scaling to a raw series.
    MetricMatrix normalize(const MetricMatrix& raw) const;
    ScoreSeries score(const MetricMatrix& raw) const;
    LocalizationReport localize(LocalizeMethod method, const MetricMatrix& raw, std::size_t start,
                                std::size_t end) const;
};

struct TrainConfig {
    ModelConfig model;
    PuConfig pu;
    std::size_t train_stride = 4;

    void validate() const;
};

struct TrainResult {
    Detector detector;
    TrainingReport report;
};

/// Training windows of a normalised series with the configured stride.
WindowBatch training_windows(const MetricMatrix& normalized, const TrainConfig& cfg);

/// Normalises, windows and PU-fits a raw training series.
TrainResult train_detector(const MetricMatrix& raw_train, const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {});

/// Prepared training data shared across a beta sweep.
struct SweepContext {
    MetricMatrix normalized;
    MinMaxStats minmax;
    WindowBatch windows;
    PhaseOne phase_one;
};

SweepContext prepare_sweep(const MetricMatrix& raw_train, const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {});

/// Phase 3 at cfg.pu.beta on top of a shared phase-1 model.
TrainResult finish_detector(const SweepContext& ctx, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});

} // namespace rtad
