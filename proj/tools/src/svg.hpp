// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rtad::app {

struct LineSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;
};

struct HorizontalLine {
    std::string label;
    std::string color = "#d62728";
    double y = 0.0;
};

/// Shaded x-range, e.g. a ground-truth anomaly segment.
struct Band {
    double x0 = 0.0;
    double x1 = 0.0;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<LineSeries> series;
    std::vector<HorizontalLine> hlines;
    std::vector<Band> bands;
    double width = 1000;
    double height = 360;
};

/// Static SVG with axes, tick labels and a legend.
std::string render_svg(const LinePlot& plot);
void write_svg(const std::filesystem::path& path, const LinePlot& plot);

} // namespace rtad::app
