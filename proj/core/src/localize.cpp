// SPDX-License-Identifier: Apache-2.0
#include "rtad/localize.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <numeric>

namespace rtad {

const char* to_string(LocalizeMethod m) {
    switch (m) {
    case LocalizeMethod::anomaly_score:
        return "anomaly_score";
    case LocalizeMethod::correlation_score:
        return "correlation_score";
    case LocalizeMethod::correlation_change:
        return "correlation_change";
    }
    return "correlation_change";
}

LocalizeMethod parse_localize_method(std::string_view name) {
    for (auto m : {LocalizeMethod::anomaly_score, LocalizeMethod::correlation_score,
                   LocalizeMethod::correlation_change}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown localization method '" + std::string(name) +
                      "' (expected anomaly_score, correlation_score or correlation_change)");
}

Mat mean_attention(const RTModel& model, const WindowBatch& windows) {
    if (windows.empty()) {
        throw ValidationError("mean attention over zero windows");
    }
    const auto m = static_cast<Eigen::Index>(windows.metrics());
    Mat sum = Mat::Zero(m, m);
    for (std::size_t s = 0; s < windows.size(); ++s) {
        sum += model.attention(windows.window(s));
    }
    return sum / static_cast<double>(windows.size());
}

Vec correlation_change(const Mat& a_normal, const Mat& a_anomalous) {
    if (a_normal.rows() != a_anomalous.rows() || a_normal.cols() != a_anomalous.cols() ||
        a_normal.rows() != a_normal.cols()) {
        throw ValidationError("attention matrices must be square and of equal shape");
    }
    Mat diff = (a_anomalous - a_normal).cwiseAbs();
    diff.diagonal().setZero();
    return diff.rowwise().sum();
}

Vec correlation_score(const Mat& a_anomalous) {
    if (a_anomalous.rows() != a_anomalous.cols()) {
        throw ValidationError("attention matrix must be square");
    }
    Mat a = a_anomalous;
    a.diagonal().setZero();
    return a.rowwise().sum();
}

Vec segment_zscore(const MetricMatrix& m, const MetricMoments& moments, std::size_t start,
                   std::size_t end) {
    if (start > end || end >= m.length()) {
        throw ValidationError("segment outside the series");
    }
    MetricMatrix slice = m.slice(start, end + 1);
    const auto M = static_cast<Eigen::Index>(m.metrics());
    Vec out = Vec::Zero(M);
    if (moments.mean.size() != m.metrics() || moments.std.size() != m.metrics()) {
        throw ValidationError("moment vectors do not match the metric count");
    }
    for (Eigen::Index j = 0; j < M; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double sd = moments.std[jj] > 0.0 ? moments.std[jj] : 1.0;
        out(j) = ((slice.values.col(j).array() - moments.mean[jj]).abs() / sd).maxCoeff();
    }
    return out;
}

std::vector<std::size_t> rank_descending(const Vec& delta) {
    std::vector<std::size_t> order(static_cast<std::size_t>(delta.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return delta(static_cast<Eigen::Index>(a)) > delta(static_cast<Eigen::Index>(b));
    });
    return order;
}

WindowBatch segment_windows(const MetricMatrix& m, std::size_t w, std::size_t start,
                            std::size_t end) {
    if (start > end || end >= m.length()) {
        throw ValidationError("segment outside the series");
    }
    if (end + 1 < w) {
        throw ValidationError("segment [" + std::to_string(start) + ", " + std::to_string(end) +
                              "] ends before the first complete window");
    }
    WindowBatch all = make_windows(m, w, 1);
    // window s ends at s + w - 1
    const std::size_t first = std::max(start, w - 1) - (w - 1);
    const std::size_t last = end - (w - 1);
    std::vector<std::size_t> idx(last - first + 1);
    std::iota(idx.begin(), idx.end(), first);
    return all.subset(idx);
}

LocalizationReport rank_metrics(LocalizeMethod method, const RTModel& model, const Mat& a_normal,
                                const MetricMoments& moments, const MetricMatrix& test,
                                std::size_t start, std::size_t end) {
    LocalizationReport r;
    r.start = start;
    r.end = end;
    r.method = method;
    switch (method) {
    case LocalizeMethod::anomaly_score:
        r.delta = segment_zscore(test, moments, start, end);
        break;
    case LocalizeMethod::correlation_score:
        r.delta = correlation_score(
            mean_attention(model, segment_windows(test, model.config().window, start, end)));
        break;
    case LocalizeMethod::correlation_change:
        r.delta = correlation_change(
            a_normal, mean_attention(model, segment_windows(test, model.config().window, start, end)));
        break;
    }
    r.ranking = rank_descending(r.delta);
    return r;
}

double hit_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<std::vector<std::size_t>>& culprits, std::size_t k) {
    if (rankings.empty()) {
        throw ValidationError("Hit@k over zero segments");
    }
    if (rankings.size() != culprits.size()) {
        throw ValidationError("rankings and culprit sets are not aligned");
    }
    std::size_t hits = 0;
    for (std::size_t s = 0; s < rankings.size(); ++s) {
        const auto& r = rankings[s];
        const std::size_t top = std::min(k, r.size());
        const bool hit = std::any_of(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(top),
                                     [&](std::size_t m) {
                                         return std::find(culprits[s].begin(), culprits[s].end(),
                                                          m) != culprits[s].end();
                                     });
        hits += hit;
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

} // namespace rtad
