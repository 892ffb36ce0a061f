// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/ingest.hpp"
#include "rtad/lcvae.hpp"
#include "rtad/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rtad {

/// Scores for timestamps first .. first + scores.size() - 1.
struct ScoreSeries {
    std::size_t first = 0;
    std::vector<double> scores;
    double threshold = 0.0;
    std::vector<int> predictions;
    std::vector<int> adjusted_predictions;

    std::size_t size() const { return scores.size(); }
    /// Sets the threshold and recomputes predictions (and their adjustment
    /// when `truth`, aligned with `scores`, is non-empty).
    void apply_threshold(double theta, std::span<const int> truth = {});
};

struct EvalResult {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// One score per timestamp t in [w-1, N-1] from the window ending at t.
/// `test` must already be normalised with the training statistics.
ScoreSeries score_series(const RTModel& model, const ScoreNormalizer& normalizer,
                         const MetricMatrix& test);

/// Fires every ground-truth segment that contains at least one predicted point.
std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> truth);

EvalResult prf1(std::span<const int> pred, std::span<const int> truth);

struct ThresholdResult {
    double threshold = 0.0;
    EvalResult eval;
};

/// Best point-adjusted F1 over n equally spaced thresholds on [min, max] of the
/// scores; predictions are score > threshold; ties go to the larger threshold.
ThresholdResult grid_search_threshold(std::span<const double> scores, std::span<const int> truth,
                                      std::size_t n_candidates = 100);

/// Point-adjusted evaluation of fixed predictions.
EvalResult evaluate_adjusted(std::span<const int> pred, std::span<const int> truth);

/// Labels for the scored range of `series`.
std::vector<int> aligned_truth(const ScoreSeries& series, std::span<const int> labels);

/// Per-metric training mean and standard deviation.
struct MetricMoments {
    std::vector<double> mean;
    std::vector<double> std;
};

MetricMoments metric_moments(const MetricMatrix& m);

/// max_j |x_tj - mean_j| / std_j per timestamp (constant metrics use std 1).
std::vector<double> max_abs_zscore(const MetricMatrix& m, const MetricMoments& moments);

/// Flags timestamps where any metric lies more than `k` standard deviations
/// from its training mean.
std::vector<int> three_sigma_predictions(const MetricMatrix& m, const MetricMoments& moments,
                                         double k = 3.0);

} // namespace rtad
