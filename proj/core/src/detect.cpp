// SPDX-License-Identifier: Apache-2.0
#include "rtad/detect.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>

namespace rtad {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw ValidationError("prediction and truth lengths differ (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
    }
}

} // namespace

void ScoreSeries::apply_threshold(double theta, std::span<const int> truth) {
    threshold = theta;
    predictions.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        predictions[i] = scores[i] > theta ? 1 : 0;
    }
    adjusted_predictions = truth.empty() ? predictions : point_adjust(predictions, truth);
}

ScoreSeries score_series(const RTModel& model, const ScoreNormalizer& normalizer,
                         const MetricMatrix& test) {
    const std::size_t w = model.config().window;
    if (test.length() < w) {
        throw ValidationError("series of length " + std::to_string(test.length()) +
                              " is shorter than the window " + std::to_string(w));
    }
    if (test.metrics() != model.config().metrics) {
        throw ValidationError("series has " + std::to_string(test.metrics()) +
                              " metrics, model expects " + std::to_string(model.config().metrics));
    }
    if (!normalizer.fitted()) {
        throw StateError("score normalizer has not been fitted");
    }
    WindowBatch windows = make_windows(test, w, 1);
    ScoreSeries out;
    out.first = w - 1;
    out.scores = model.raw_scores(windows);
    for (double& s : out.scores) {
        s = normalizer.apply(s);
    }
    out.apply_threshold(1.0);
    return out;
}

std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred.size(), truth.size());
    std::vector<int> out(pred.begin(), pred.end());
    std::size_t i = 0;
    while (i < truth.size()) {
        if (truth[i] != 1) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool hit = false;
        while (j < truth.size() && truth[j] == 1) {
            hit = hit || pred[j] == 1;
            ++j;
        }
        if (hit) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(i),
                      out.begin() + static_cast<std::ptrdiff_t>(j), 1);
        }
        i = j;
    }
    return out;
}

EvalResult prf1(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred.size(), truth.size());
    EvalResult r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == 1;
        const bool t = truth[i] == 1;
        r.tp += p && t;
        r.fp += p && !t;
        r.fn += !p && t;
    }
    r.precision = r.tp + r.fp == 0 ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    r.recall = r.tp + r.fn == 0 ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    const double sum = r.precision + r.recall;
    r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
    return r;
}

EvalResult evaluate_adjusted(std::span<const int> pred, std::span<const int> truth) {
    return prf1(point_adjust(pred, truth), truth);
}

ThresholdResult grid_search_threshold(std::span<const double> scores, std::span<const int> truth,
                                      std::size_t n_candidates) {
    check_lengths(scores.size(), truth.size());
    if (scores.empty()) {
        throw ValidationError("cannot search a threshold over zero scores");
    }
    if (n_candidates == 0) {
        throw ValidationError("need at least one threshold candidate");
    }
    auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<int> pred(scores.size());
    auto evaluate = [&](double theta) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            pred[i] = scores[i] > theta ? 1 : 0;
        }
        return evaluate_adjusted(pred, truth);
    };
    if (hi == lo || n_candidates == 1) {
        return {hi, evaluate(hi)};
    }
    ThresholdResult best{lo, evaluate(lo)};
    for (std::size_t c = 1; c < n_candidates; ++c) {
        const double theta = c + 1 == n_candidates
                                 ? hi
                                 : lo + (hi - lo) * static_cast<double>(c) /
                                            static_cast<double>(n_candidates - 1);
        EvalResult r = evaluate(theta);
        if (r.f1 >= best.eval.f1) {
            best = {theta, r};
        }
    }
    return best;
}

std::vector<int> aligned_truth(const ScoreSeries& series, std::span<const int> labels) {
    if (labels.size() < series.first + series.size()) {
        throw ValidationError("labels do not cover the scored range");
    }
    auto begin = labels.begin() + static_cast<std::ptrdiff_t>(series.first);
    return {begin, begin + static_cast<std::ptrdiff_t>(series.size())};
}

MetricMoments metric_moments(const MetricMatrix& m) {
    MetricMoments out;
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
        auto col = m.values.col(j).array();
        const double mean = col.mean();
        out.mean.push_back(mean);
        out.std.push_back(std::sqrt((col - mean).square().mean()));
    }
    return out;
}

std::vector<double> max_abs_zscore(const MetricMatrix& m, const MetricMoments& moments) {
    if (moments.mean.size() != m.metrics() || moments.std.size() != m.metrics()) {
        throw ValidationError("moment vectors do not match the metric count");
    }
    std::vector<double> out(m.length(), 0.0);
    for (std::size_t j = 0; j < m.metrics(); ++j) {
        const double sd = moments.std[j] > 0.0 ? moments.std[j] : 1.0;
        for (std::size_t t = 0; t < m.length(); ++t) {
            const double z = std::abs(m.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) -
                                      moments.mean[j]) / sd;
            out[t] = std::max(out[t], z);
        }
    }
    return out;
}

std::vector<int> three_sigma_predictions(const MetricMatrix& m, const MetricMoments& moments,
                                         double k) {
    std::vector<double> z = max_abs_zscore(m, moments);
    std::vector<int> out(z.size());
    std::transform(z.begin(), z.end(), out.begin(), [k](double v) { return v > k ? 1 : 0; });
    return out;
}

} // namespace rtad
