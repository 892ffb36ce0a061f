// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/detect.hpp"
#include "rtad/ingest.hpp"
#include "rtad/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtad {

enum class LocalizeMethod { anomaly_score, correlation_score, correlation_change };

const char* to_string(LocalizeMethod m);
/// Throws ConfigError for unknown names.
LocalizeMethod parse_localize_method(std::string_view name);

struct LocalizationReport {
    std::size_t start = 0;
    std::size_t end = 0;
    LocalizeMethod method = LocalizeMethod::correlation_change;
    Vec delta;
    std::vector<std::size_t> ranking;
};

/// Elementwise mean of the continuous attention matrices of every window.
Mat mean_attention(const RTModel& model, const WindowBatch& windows);

/// delta_i = sum_{j != i} |a_ij - n_ij|.
Vec correlation_change(const Mat& a_normal, const Mat& a_anomalous);

/// delta_i = sum_{j != i} a_ij.
Vec correlation_score(const Mat& a_anomalous);

/// Per-metric max |z| over timestamps start..end.
Vec segment_zscore(const MetricMatrix& m, const MetricMoments& moments, std::size_t start,
                   std::size_t end);

/// Indices sorted by value descending, lower index first on ties.
std::vector<std::size_t> rank_descending(const Vec& delta);

/// Windows of length w whose last timestamp lies in [start, end].
WindowBatch segment_windows(const MetricMatrix& m, std::size_t w, std::size_t start,
                            std::size_t end);

/// `test` must be normalised with the training statistics; `moments` are the
/// per-metric moments of the normalised training series.
LocalizationReport rank_metrics(LocalizeMethod method, const RTModel& model, const Mat& a_normal,
                                const MetricMoments& moments, const MetricMatrix& test,
                                std::size_t start, std::size_t end);

/// Fraction of segments whose top-k ranking meets the culprit set.
double hit_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<std::vector<std::size_t>>& culprits, std::size_t k);

} // namespace rtad
