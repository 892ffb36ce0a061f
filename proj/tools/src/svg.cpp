// SPDX-License-Identifier: Apache-2.0
#include "svg.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rtad::app {
namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

} // namespace

std::string render_svg(const LinePlot& plot) {
    const double left = 70;
    const double right = 170;
    const double top = 40;
    const double bottom = 50;
    const double pw = plot.width - left - right;
    const double ph = plot.height - top - bottom;

    Range xr;
    Range yr;
    for (const auto& s : plot.series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    for (const auto& h : plot.hlines) yr.add(h.y);
    for (const auto& b : plot.bands) {
        xr.add(b.x0);
        xr.add(b.x1);
    }
    xr.finish();
    yr.finish();
    auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
       << plot.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << escape(plot.title) << "</text>\n";

    for (const auto& b : plot.bands) {
        os << "<rect x=\"" << px(b.x0) << "\" y=\"" << top << "\" width=\""
           << std::max(1.0, px(b.x1) - px(b.x0)) << "\" height=\"" << ph
           << "\" fill=\"#ff9896\" fill-opacity=\"0.35\"/>\n";
    }

    os << "<g stroke=\"#444\" fill=\"none\">"
       << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
       << top + ph << "\"/>"
       << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\"/></g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        os << "<text x=\"" << px(fx) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
           << tick(fx) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
           << tick(fy) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << plot.height - 10
       << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << top + ph / 2
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(plot.y_label) << "</text>\n";

    for (const auto& s : plot.series) {
        const std::size_t n = std::min(s.x.size(), s.y.size());
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            os << px(s.x[i]) << "," << py(s.y[i]) << " ";
        }
        os << "\"/>\n";
        if (s.markers) {
            for (std::size_t i = 0; i < n; ++i) {
                os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\""
                   << s.color << "\"/>\n";
            }
        }
    }
    for (const auto& h : plot.hlines) {
        os << "<line x1=\"" << left << "\" y1=\"" << py(h.y) << "\" x2=\"" << left + pw << "\" y2=\""
           << py(h.y) << "\" stroke=\"" << h.color << "\" stroke-dasharray=\"6,4\"/>\n";
    }

    double ly = top + 8;
    auto legend = [&](const std::string& label, const std::string& color, bool dashed) {
        os << "<line x1=\"" << left + pw + 14 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40
           << "\" y2=\"" << ly << "\" stroke=\"" << color << "\""
           << (dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>"
           << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << escape(label)
           << "</text>\n";
        ly += 18;
    };
    for (const auto& s : plot.series) legend(s.label, s.color, false);
    for (const auto& h : plot.hlines) legend(h.label, h.color, true);
    if (!plot.bands.empty()) {
        os << "<rect x=\"" << left + pw + 14 << "\" y=\"" << ly - 6 << "\" width=\"26\" height=\"12\""
           << " fill=\"#ff9896\" fill-opacity=\"0.35\"/><text x=\"" << left + pw + 46 << "\" y=\""
           << ly + 4 << "\">anomaly</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_svg(const std::filesystem::path& path, const LinePlot& plot) {
    std::ofstream os(path);
    if (!os) {
        throw ValidationError("cannot write " + path.string());
    }
    os << render_svg(plot);
}

} // namespace rtad::app
