// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rtad {

/// Contiguous anomaly segment [start, end] (inclusive) with the metrics that
/// caused it, 0-based.
struct CulpritSegment {
    std::size_t start = 0;
    std::size_t end = 0;
    std::vector<std::size_t> metrics;

    bool operator==(const CulpritSegment&) const = default;
};

/// Multivariate series: one row per timestamp, one column per metric.
/// Timestamps are the implicit row index 0..N-1.
struct MetricMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> metric_names;
    std::vector<int> labels;               // empty, or one 0/1 per row
    std::vector<CulpritSegment> culprits;  // optional interpretation labels

    std::size_t length() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t metrics() const { return static_cast<std::size_t>(values.cols()); }
    bool has_labels() const { return !labels.empty(); }

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;

    /// Rows [begin, end) with their labels; culprit segments are clipped and
    /// re-based to the slice.
    MetricMatrix slice(std::size_t begin, std::size_t end) const;
};

enum class DataFormat { smd, csv };

DataFormat parse_data_format(const std::string& name);

/// Loads the value file. `smd`: comma-separated floats, one line per
/// timestamp, no header. `csv`: same, preceded by a header of metric names.
/// Empty fields and "nan" are missing; they are forward-filled per metric and
/// leading gaps become 0.
MetricMatrix load_metric_matrix(const std::filesystem::path& path, DataFormat format);

/// One 0/1 label per line; an optional non-numeric first line is a header.
std::vector<int> load_labels(const std::filesystem::path& path);

/// SMD interpretation lines "a-b:i1,i2,..." with 1-based metric indices.
std::vector<CulpritSegment> load_interpretation(const std::filesystem::path& path);
std::vector<CulpritSegment> parse_interpretation(const std::string& text);

/// Attaches labels / culprits and re-validates.
void attach_labels(MetricMatrix& m, std::vector<int> labels);
void attach_culprits(MetricMatrix& m, std::vector<CulpritSegment> culprits);

void write_csv(const MetricMatrix& m, const std::filesystem::path& path);
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);
void write_interpretation(const std::vector<CulpritSegment>& culprits,
                          const std::filesystem::path& path);
std::string format_interpretation(const std::vector<CulpritSegment>& culprits);

/// Per-metric training range used by min-max scaling.
struct MinMaxStats {
    std::vector<double> min;
    std::vector<double> max;

    static constexpr double kClipLow = -1.0;
    static constexpr double kClipHigh = 2.0;

    /// Scaled and clipped value of metric `j`. Constant metrics use a span of 1.
    double apply(double value, std::size_t j) const;
};

std::pair<MetricMatrix, MinMaxStats> minmax_normalize(
    const MetricMatrix& m, const std::optional<MinMaxStats>& stats = std::nullopt);

/// Sliding windows over a shared series. Windows are materialised on demand
/// (metric-major, M x w) so large datasets are not copied S times.
class WindowBatch {
public:
    WindowBatch() = default;
    WindowBatch(std::shared_ptr<const Eigen::MatrixXd> source, std::size_t window,
                std::vector<std::size_t> end_index, std::vector<int> y);

    std::size_t size() const { return end_index_.size(); }
    bool empty() const { return end_index_.empty(); }
    std::size_t window_length() const { return window_; }
    std::size_t metrics() const { return source_ ? static_cast<std::size_t>(source_->cols()) : 0; }

    const std::vector<std::size_t>& end_index() const { return end_index_; }
    const std::vector<int>& y() const { return y_; }

    /// values[end-w+1 .. end, :] transposed to M x w.
    Eigen::MatrixXd window(std::size_t s) const;

    WindowBatch subset(std::span<const std::size_t> indices) const;
    WindowBatch with_labels(std::vector<int> y) const;

private:
    std::shared_ptr<const Eigen::MatrixXd> source_;
    std::size_t window_ = 0;
    std::vector<std::size_t> end_index_;
    std::vector<int> y_;
};

/// S = floor((N - w) / stride) + 1 windows, the first ending at w-1.
WindowBatch make_windows(const MetricMatrix& m, std::size_t w, std::size_t stride = 1);

/// Maximal runs of 1s in a label vector as inclusive [start, end] pairs.
std::vector<std::pair<std::size_t, std::size_t>> label_segments(std::span<const int> labels);

} // namespace rtad
