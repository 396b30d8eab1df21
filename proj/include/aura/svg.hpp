#pragma once

// Dependency-free SVG emission for forecast, residual-score and gate
// histograms. Output is deterministic text, suitable for diffing.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "aura/error.hpp"

namespace aura::svg {

struct Series {
    std::string css_class;  // e.g. "forecast", "truth"
    std::string color;
    std::vector<double> y;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace detail

// Simple multi-series line chart; x is the sample index.
inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              int width = 640, int height = 320) {
    if (series.empty()) throw ValueError("line_chart: no series");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.y.size());
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (n < 1) throw ValueError("line_chart: empty series");
    if (hi <= lo) hi = lo + 1.0;
    const double mx = 45, my = 30;
    const double pw = width - 2 * mx, ph = height - 2 * my;
    auto X = [&](std::size_t i) {
        return mx + pw * (n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1));
    };
    auto Y = [&](double v) { return my + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + detail::num(width / 2.0) +
           "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
    out += "<line x1=\"" + detail::num(mx) + "\" y1=\"" + detail::num(my + ph) + "\" x2=\"" +
           detail::num(mx + pw) + "\" y2=\"" + detail::num(my + ph) +
           "\" stroke=\"#999\"/>\n";
    out += "<line x1=\"" + detail::num(mx) + "\" y1=\"" + detail::num(my) + "\" x2=\"" +
           detail::num(mx) + "\" y2=\"" + detail::num(my + ph) + "\" stroke=\"#999\"/>\n";
    out += "<text x=\"" + detail::num(mx - 5) + "\" y=\"" + detail::num(Y(hi) + 4) +
           "\" text-anchor=\"end\" font-size=\"10\">" + detail::num(hi) + "</text>\n";
    out += "<text x=\"" + detail::num(mx - 5) + "\" y=\"" + detail::num(Y(lo) + 4) +
           "\" text-anchor=\"end\" font-size=\"10\">" + detail::num(lo) + "</text>\n";

    for (const auto& s : series) {
        out += "<polyline class=\"" + s.css_class + "\" fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            if (i) out += ' ';
            out += detail::num(X(i)) + "," + detail::num(Y(s.y[i]));
        }
        out += "\"/>\n";
    }
    // legend
    double ly = my + 8;
    for (const auto& s : series) {
        out += "<line x1=\"" + detail::num(mx + pw - 110) + "\" y1=\"" + detail::num(ly) +
               "\" x2=\"" + detail::num(mx + pw - 90) + "\" y2=\"" + detail::num(ly) +
               "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + detail::num(mx + pw - 84) + "\" y=\"" + detail::num(ly + 4) +
               "\" font-size=\"11\">" + s.css_class + "</text>\n";
        ly += 16;
    }
    out += "</svg>\n";
    return out;
}

struct HistSeries {
    std::string css_class;
    std::string color;
    std::vector<double> values;
};

// Overlaid histograms with shared binning over [lo, hi].
inline std::string histogram(const std::vector<HistSeries>& series, std::size_t bins,
                             const std::string& title, int width = 640, int height = 320) {
    if (series.empty() || bins == 0) throw ValueError("histogram: no data");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : series)
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) throw ValueError("histogram: empty series");
    if (hi <= lo) hi = lo + 1.0;

    std::vector<std::vector<double>> counts(series.size(), std::vector<double>(bins, 0.0));
    double peak = 0.0;
    for (std::size_t si = 0; si < series.size(); ++si) {
        for (double v : series[si].values) {
            std::size_t b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
            if (b >= bins) b = bins - 1;
            counts[si][b] += 1.0;
        }
        for (double c : counts[si]) peak = std::max(peak, c);
    }
    if (peak <= 0) peak = 1.0;

    const double mx = 45, my = 30;
    const double pw = width - 2 * mx, ph = height - 2 * my;
    const double bw = pw / static_cast<double>(bins);

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + detail::num(width / 2.0) +
           "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" + title + "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        for (std::size_t b = 0; b < bins; ++b) {
            const double h = ph * counts[si][b] / peak;
            if (h <= 0) continue;
            out += "<rect class=\"" + series[si].css_class + "\" x=\"" +
                   detail::num(mx + bw * static_cast<double>(b)) + "\" y=\"" +
                   detail::num(my + ph - h) + "\" width=\"" + detail::num(bw) +
                   "\" height=\"" + detail::num(h) + "\" fill=\"" + series[si].color +
                   "\" fill-opacity=\"0.45\"/>\n";
        }
    }
    out += "<line x1=\"" + detail::num(mx) + "\" y1=\"" + detail::num(my + ph) + "\" x2=\"" +
           detail::num(mx + pw) + "\" y2=\"" + detail::num(my + ph) + "\" stroke=\"#999\"/>\n";
    out += "<text x=\"" + detail::num(mx) + "\" y=\"" + detail::num(my + ph + 14) +
           "\" font-size=\"10\">" + detail::num(lo) + "</text>\n";
    out += "<text x=\"" + detail::num(mx + pw) + "\" y=\"" + detail::num(my + ph + 14) +
           "\" text-anchor=\"end\" font-size=\"10\">" + detail::num(hi) + "</text>\n";
    double ly = my + 8;
    for (const auto& s : series) {
        out += "<rect x=\"" + detail::num(mx + pw - 110) + "\" y=\"" + detail::num(ly - 8) +
               "\" width=\"12\" height=\"12\" fill=\"" + s.color + "\" fill-opacity=\"0.45\"/>\n";
        out += "<text x=\"" + detail::num(mx + pw - 92) + "\" y=\"" + detail::num(ly + 2) +
               "\" font-size=\"11\">" + s.css_class + "</text>\n";
        ly += 16;
    }
    out += "</svg>\n";
    return out;
}

}  // namespace aura::svg
