#ifndef NANOSEG_PLOT_HPP
#define NANOSEG_PLOT_HPP

#include "evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace nanoseg {

namespace detail {

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string svg_open(int w, int h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n"
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string svg_text(double x, double y, const std::string& s, const char* anchor = "middle") {
    return "<text x=\"" + fmt_num(x) + "\" y=\"" + fmt_num(y) + "\" text-anchor=\"" + anchor + "\">" + s +
           "</text>\n";
}

inline std::string svg_line(double x0, double y0, double x1, double y1, const char* stroke = "black") {
    return "<line x1=\"" + fmt_num(x0) + "\" y1=\"" + fmt_num(y0) + "\" x2=\"" + fmt_num(x1) + "\" y2=\"" +
           fmt_num(y1) + "\" stroke=\"" + stroke + "\"/>\n";
}

}  // namespace detail

/// Grouped bar chart of predicted vs. truth instance areas.
inline std::string size_distribution_svg(const SizeDistribution& predicted, const SizeDistribution& truth) {
    constexpr int W = 640, H = 360, L = 60, R = 20, T = 30, B = 50;
    const std::size_t bins = std::max<std::size_t>(1, std::max(predicted.counts.size(), truth.counts.size()));
    std::uint64_t top = 1;
    for (auto c : predicted.counts) top = std::max(top, c);
    for (auto c : truth.counts) top = std::max(top, c);
    const double pw = W - L - R;
    const double ph = H - T - B;
    const double slot = pw / static_cast<double>(bins);

    std::string s = detail::svg_open(W, H);
    s += detail::svg_text(W / 2.0, 18, "Instance area distribution (bin width " +
                                           detail::fmt_num(predicted.bin_width) + " px^2)");
    s += detail::svg_line(L, T + ph, L + pw, T + ph);
    s += detail::svg_line(L, T, L, T + ph);
    auto bar = [&](std::size_t b, std::uint64_t c, double offset, const char* fill) {
        const double h = ph * static_cast<double>(c) / static_cast<double>(top);
        return "<rect x=\"" + detail::fmt_num(L + b * slot + offset) + "\" y=\"" + detail::fmt_num(T + ph - h) +
               "\" width=\"" + detail::fmt_num(slot * 0.4) + "\" height=\"" + detail::fmt_num(h) +
               "\" fill=\"" + fill + "\"/>\n";
    };
    for (std::size_t b = 0; b < bins; ++b) {
        const auto pc = b < predicted.counts.size() ? predicted.counts[b] : 0;
        const auto tc = b < truth.counts.size() ? truth.counts[b] : 0;
        s += bar(b, tc, slot * 0.1, "#999999");
        s += bar(b, pc, slot * 0.5, "#1f77b4");
    }
    for (std::size_t b = 0; b <= bins; b += std::max<std::size_t>(1, bins / 8))
        s += detail::svg_text(L + b * slot, T + ph + 15, detail::fmt_num(b * predicted.bin_width));
    s += detail::svg_text(L - 8, T + 4, std::to_string(top), "end");
    s += detail::svg_text(W / 2.0, H - 10, "area (px^2); grey = truth, blue = predicted");
    s += "</svg>\n";
    return s;
}

/// Polyline of (x, y) points, e.g. pixel accuracy against SNR.
inline std::string line_chart_svg(const std::vector<std::pair<double, double>>& points,
                                  const std::string& title, const std::string& x_label,
                                  const std::string& y_label) {
    constexpr int W = 640, H = 360, L = 60, R = 20, T = 30, B = 50;
    std::string s = detail::svg_open(W, H);
    s += detail::svg_text(W / 2.0, 18, title);
    const double pw = W - L - R;
    const double ph = H - T - B;
    s += detail::svg_line(L, T + ph, L + pw, T + ph);
    s += detail::svg_line(L, T, L, T + ph);
    if (!points.empty()) {
        double x0 = points.front().first, x1 = x0, y0 = points.front().second, y1 = y0;
        for (const auto& [x, y] : points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1e-6;
        auto px = [&](double x) { return L + pw * (x - x0) / (x1 - x0); };
        auto py = [&](double y) { return T + ph - ph * (y - y0) / (y1 - y0); };
        std::string path;
        for (const auto& [x, y] : points) path += detail::fmt_num(px(x)) + "," + detail::fmt_num(py(y)) + " ";
        s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
        for (const auto& [x, y] : points) {
            s += "<circle cx=\"" + detail::fmt_num(px(x)) + "\" cy=\"" + detail::fmt_num(py(y)) +
                 "\" r=\"3\" fill=\"#1f77b4\"/>\n";
            s += detail::svg_text(px(x), T + ph + 15, detail::fmt_num(x));
        }
        s += detail::svg_text(L - 8, py(y1) + 4, detail::fmt_num(y1), "end");
        s += detail::svg_text(L - 8, py(y0) + 4, detail::fmt_num(y0), "end");
    }
    s += detail::svg_text(W / 2.0, H - 10, x_label);
    s += detail::svg_text(14, T + ph / 2, y_label);
    s += "</svg>\n";
    return s;
}

}  // namespace nanoseg

#endif  // NANOSEG_PLOT_HPP
