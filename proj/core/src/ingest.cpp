// SPDX-License-Identifier: Apache-2.0
#include "rtad/ingest.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

namespace rtad {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

bool is_missing(std::string_view field) {
    return field.empty() || field == "nan" || field == "NaN" || field == "NA" || field == "null";
}

bool parse_double(std::string_view field, double& out) {
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

bool parse_size(std::string_view field, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

void MetricMatrix::validate() const {
    if (values.rows() == 0 || values.cols() == 0) {
        throw ValidationError("metric matrix is empty");
    }
    if (metric_names.size() != metrics()) {
        throw ValidationError("metric name count " + std::to_string(metric_names.size()) +
                              " does not match column count " + std::to_string(metrics()));
    }
    if (!values.allFinite()) {
        throw ValidationError("metric matrix contains non-finite values");
    }
    if (!labels.empty()) {
        if (labels.size() != length()) {
            throw ValidationError("label length " + std::to_string(labels.size()) +
                                  " does not match series length " + std::to_string(length()));
        }
        for (int l : labels) {
            if (l != 0 && l != 1) {
                throw ValidationError("labels must be 0 or 1");
            }
        }
    }
    for (const auto& seg : culprits) {
        if (seg.start > seg.end || seg.end >= length()) {
            throw ValidationError("culprit segment " + std::to_string(seg.start) + "-" +
                                  std::to_string(seg.end) + " outside series of length " +
                                  std::to_string(length()));
        }
        for (std::size_t k : seg.metrics) {
            if (k >= metrics()) {
                throw ValidationError("culprit metric index " + std::to_string(k) +
                                      " out of range");
            }
        }
    }
}

MetricMatrix MetricMatrix::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > length()) {
        throw ValidationError("invalid slice bounds");
    }
    MetricMatrix out;
    out.values = values.middleRows(static_cast<Eigen::Index>(begin),
                                   static_cast<Eigen::Index>(end - begin));
    out.metric_names = metric_names;
    if (!labels.empty()) {
        out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                          labels.begin() + static_cast<std::ptrdiff_t>(end));
    }
    for (const auto& seg : culprits) {
        if (seg.end < begin || seg.start >= end) {
            continue;
        }
        CulpritSegment s = seg;
        s.start = std::max(seg.start, begin) - begin;
        s.end = std::min(seg.end, end - 1) - begin;
        out.culprits.push_back(std::move(s));
    }
    return out;
}

DataFormat parse_data_format(const std::string& name) {
    if (name == "smd") {
        return DataFormat::smd;
    }
    if (name == "csv") {
        return DataFormat::csv;
    }
    throw ConfigError("unknown data format '" + name + "' (expected smd or csv)");
}

MetricMatrix load_metric_matrix(const std::filesystem::path& path, DataFormat format) {
    std::vector<std::string> lines = read_lines(path);
    MetricMatrix m;
    std::size_t first = 0;
    if (format == DataFormat::csv) {
        if (lines.empty()) {
            throw ValidationError(path.string() + ": empty file");
        }
        for (auto name : split(lines[0], ',')) {
            m.metric_names.emplace_back(name);
        }
        first = 1;
    }
    if (lines.size() <= first) {
        throw ValidationError(path.string() + ": no data rows");
    }

    const std::size_t rows = lines.size() - first;
    const std::size_t cols = split(lines[first], ',').size();
    if (format == DataFormat::csv && cols != m.metric_names.size()) {
        throw FormatError(path.string() + ": line 2 has " + std::to_string(cols) +
                          " fields but the header names " +
                          std::to_string(m.metric_names.size()) + " metrics");
    }
    if (format == DataFormat::smd) {
        for (std::size_t j = 0; j < cols; ++j) {
            m.metric_names.push_back("m" + std::to_string(j));
        }
    }

    constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
    m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t line_no = r + first + 1;
        auto fields = split(lines[r + first], ',');
        if (fields.size() != cols) {
            throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            double v = kMissing;
            if (!is_missing(fields[c]) && !parse_double(fields[c], v)) {
                throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                                 " field " + std::to_string(c + 1) + " is not numeric: '" +
                                 std::string(fields[c]) + "'");
            }
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }

    // forward fill, leading gaps -> 0
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
        double last = 0.0;
        for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
            double& v = m.values(r, c);
            if (std::isnan(v)) {
                v = last;
            } else {
                last = v;
            }
        }
    }
    m.validate();
    return m;
}

std::vector<int> load_labels(const std::filesystem::path& path) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<int> labels;
    labels.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view f = trim(lines[i]);
        double v = 0;
        if (!parse_double(f, v)) {
            if (i == 0) {
                continue;  // header
            }
            throw ParseError(path.string() + ": line " + std::to_string(i + 1) +
                             " is not a label: '" + std::string(f) + "'");
        }
        if (v != 0.0 && v != 1.0) {
            throw ValidationError(path.string() + ": line " + std::to_string(i + 1) +
                                  " label must be 0 or 1");
        }
        labels.push_back(static_cast<int>(v));
    }
    if (labels.empty()) {
        throw ValidationError(path.string() + ": no labels");
    }
    return labels;
}

std::vector<CulpritSegment> parse_interpretation(const std::string& text) {
    std::vector<CulpritSegment> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty()) {
            continue;
        }
        auto colon = line.find(':');
        auto dash = line.find('-');
        if (colon == std::string_view::npos || dash == std::string_view::npos || dash > colon) {
            throw FormatError("interpretation line " + std::to_string(line_no) +
                              " is not of the form a-b:i1,i2,...");
        }
        CulpritSegment seg;
        if (!parse_size(trim(line.substr(0, dash)), seg.start) ||
            !parse_size(trim(line.substr(dash + 1, colon - dash - 1)), seg.end)) {
            throw ParseError("interpretation line " + std::to_string(line_no) +
                             ": bad segment bounds");
        }
        for (auto field : split(line.substr(colon + 1), ',')) {
            if (field.empty()) {
                continue;
            }
            std::size_t idx = 0;
            if (!parse_size(field, idx) || idx == 0) {
                throw ParseError("interpretation line " + std::to_string(line_no) +
                                 ": bad metric index '" + std::string(field) + "'");
            }
            seg.metrics.push_back(idx - 1);
        }
        if (seg.start > seg.end) {
            throw ValidationError("interpretation line " + std::to_string(line_no) +
                                  ": start after end");
        }
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<CulpritSegment> load_interpretation(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_interpretation(ss.str());
}

void attach_labels(MetricMatrix& m, std::vector<int> labels) {
    m.labels = std::move(labels);
    m.validate();
}

void attach_culprits(MetricMatrix& m, std::vector<CulpritSegment> culprits) {
    m.culprits = std::move(culprits);
    m.validate();
}

void write_csv(const MetricMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    for (std::size_t j = 0; j < m.metric_names.size(); ++j) {
        out << (j ? "," : "") << m.metric_names[j];
    }
    out << '\n';
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
            out << (c ? "," : "") << format_double(m.values(r, c));
        }
        out << '\n';
    }
}

void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << "label\n";
    for (int l : labels) {
        out << l << '\n';
    }
}

std::string format_interpretation(const std::vector<CulpritSegment>& culprits) {
    std::ostringstream out;
    for (const auto& seg : culprits) {
        out << seg.start << '-' << seg.end << ':';
        for (std::size_t i = 0; i < seg.metrics.size(); ++i) {
            out << (i ? "," : "") << seg.metrics[i] + 1;
        }
        out << '\n';
    }
    return out.str();
}

void write_interpretation(const std::vector<CulpritSegment>& culprits,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    out << format_interpretation(culprits);
}

double MinMaxStats::apply(double value, std::size_t j) const {
    double span = max[j] - min[j];
    if (span == 0.0) {
        span = 1.0;
    }
    return std::clamp((value - min[j]) / span, kClipLow, kClipHigh);
}

std::pair<MetricMatrix, MinMaxStats> minmax_normalize(const MetricMatrix& m,
                                                      const std::optional<MinMaxStats>& stats) {
    MinMaxStats s;
    if (stats) {
        if (stats->min.size() != m.metrics() || stats->max.size() != m.metrics()) {
            throw ValidationError("normalization stats cover " +
                                  std::to_string(stats->min.size()) + " metrics, data has " +
                                  std::to_string(m.metrics()));
        }
        s = *stats;
    } else {
        s.min.resize(m.metrics());
        s.max.resize(m.metrics());
        for (std::size_t j = 0; j < m.metrics(); ++j) {
            s.min[j] = m.values.col(static_cast<Eigen::Index>(j)).minCoeff();
            s.max[j] = m.values.col(static_cast<Eigen::Index>(j)).maxCoeff();
        }
    }
    MetricMatrix out = m;
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
            out.values(r, c) = s.apply(out.values(r, c), static_cast<std::size_t>(c));
        }
    }
    return {std::move(out), std::move(s)};
}

WindowBatch::WindowBatch(std::shared_ptr<const Eigen::MatrixXd> source, std::size_t window,
                         std::vector<std::size_t> end_index, std::vector<int> y)
    : source_(std::move(source)), window_(window), end_index_(std::move(end_index)),
      y_(std::move(y)) {
    if (y_.size() != end_index_.size()) {
        throw ValidationError("window labels and end indices differ in length");
    }
}

Eigen::MatrixXd WindowBatch::window(std::size_t s) const {
    const auto end = static_cast<Eigen::Index>(end_index_.at(s));
    const auto w = static_cast<Eigen::Index>(window_);
    return source_->middleRows(end - w + 1, w).transpose();
}

WindowBatch WindowBatch::subset(std::span<const std::size_t> indices) const {
    std::vector<std::size_t> ends;
    std::vector<int> y;
    ends.reserve(indices.size());
    y.reserve(indices.size());
    for (std::size_t i : indices) {
        ends.push_back(end_index_.at(i));
        y.push_back(y_.at(i));
    }
    return WindowBatch(source_, window_, std::move(ends), std::move(y));
}

WindowBatch WindowBatch::with_labels(std::vector<int> y) const {
    return WindowBatch(source_, window_, end_index_, std::move(y));
}

WindowBatch make_windows(const MetricMatrix& m, std::size_t w, std::size_t stride) {
    if (w == 0 || stride == 0) {
        throw ValidationError("window length and stride must be positive");
    }
    if (w > m.length()) {
        throw ValidationError("window length " + std::to_string(w) + " exceeds series length " +
                              std::to_string(m.length()));
    }
    const std::size_t count = (m.length() - w) / stride + 1;
    std::vector<std::size_t> ends(count);
    std::vector<int> y(count, 0);
    for (std::size_t s = 0; s < count; ++s) {
        ends[s] = w - 1 + s * stride;
        if (m.has_labels()) {
            y[s] = m.labels[ends[s]];
        }
    }
    auto source = std::make_shared<const Eigen::MatrixXd>(m.values);
    return WindowBatch(std::move(source), w, std::move(ends), std::move(y));
}

std::vector<std::pair<std::size_t, std::size_t>> label_segments(std::span<const int> labels) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < labels.size()) {
        if (labels[i] != 1) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < labels.size() && labels[j + 1] == 1) {
            ++j;
        }
        out.emplace_back(i, j);
        i = j + 1;
    }
    return out;
}

} // namespace rtad
