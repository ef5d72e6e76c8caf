#ifndef NANOSEG_SEGMENT_HPP
#define NANOSEG_SEGMENT_HPP

#include "imagecore.hpp"
#include "scenesim.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nanoseg {

class DegenerateHistogramError : public std::runtime_error {
public:
    DegenerateHistogramError()
        : std::runtime_error("otsu_threshold: image has a single intensity level") {}
};

/// Foreground iff the 8-bit quantized level is strictly greater than `level`.
inline BinaryMask apply_threshold(const Image& img, int level) {
    if (level < 0 || level > 255) throw std::invalid_argument("threshold level must be in [0, 255]");
    BinaryMask mask(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) mask[i] = quantize8(img[i]) > level ? 1 : 0;
    return mask;
}

/// Between-class variance w0 w1 (mu0 - mu1)^2 when class 0 holds levels <= t.
/// Evaluated from exact integer class sums, so equal splits give equal scores.
inline double between_class_variance(std::uint64_t n0, std::uint64_t s0, std::uint64_t n,
                                     std::uint64_t s) {
    const std::uint64_t n1 = n - n0;
    if (n0 == 0 || n1 == 0) return 0.0;
    const double w0 = static_cast<double>(n0) / static_cast<double>(n);
    const double w1 = static_cast<double>(n1) / static_cast<double>(n);
    const double mu0 = static_cast<double>(s0) / static_cast<double>(n0);
    const double mu1 = static_cast<double>(s - s0) / static_cast<double>(n1);
    return w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
}

struct OtsuResult {
    int threshold = 0;
    BinaryMask mask;
};

/// Maximizes the between-class variance over the 256-bin histogram; ties go
/// to the smaller threshold. Throws DegenerateHistogramError on a constant image.
inline int otsu_level(const IntensityHistogram& hist) {
    std::uint64_t n = 0;
    std::uint64_t s = 0;
    int occupied = 0;
    for (int b = 0; b < kHistogramBins; ++b) {
        n += hist.bins[b];
        s += hist.bins[b] * static_cast<std::uint64_t>(b);
        occupied += hist.bins[b] != 0;
    }
    if (occupied < 2) throw DegenerateHistogramError();
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    int best = 0;
    double best_score = -1.0;
    for (int t = 0; t < kHistogramBins - 1; ++t) {
        n0 += hist.bins[t];
        s0 += hist.bins[t] * static_cast<std::uint64_t>(t);
        const double score = between_class_variance(n0, s0, n, s);
        if (score > best_score) {
            best_score = score;
            best = t;
        }
    }
    return best;
}

inline OtsuResult otsu_threshold(const Image& img) {
    const int t = otsu_level(compute_histogram(img));
    return {t, apply_threshold(img, t)};
}

namespace detail {

struct DisjointSets {
    std::vector<Label> parent;

    Label make() {
        parent.push_back(static_cast<Label>(parent.size()));
        return parent.back();
    }
    Label find(Label a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(Label a, Label b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Smaller root wins so roots stay in first-encounter order.
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace detail

/// Two-pass 8-connected labeling; labels 1..N in first-encounter raster order.
inline LabelMap connected_components(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    LabelMap provisional(w, h, 0);
    detail::DisjointSets sets;
    sets.make();  // slot 0 = background

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            Label found = 0;
            // Already-visited 8-neighbours: W, NW, N, NE.
            const int nx[4] = {x - 1, x - 1, x, x + 1};
            const int ny[4] = {y, y - 1, y - 1, y - 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0) continue;
                const Label l = provisional(nx[k], ny[k]);
                if (l == 0) continue;
                if (found == 0) found = l;
                else sets.unite(found, l);
            }
            provisional(x, y) = found != 0 ? found : sets.make();
        }

    std::vector<Label> final_label(sets.parent.size(), 0);
    Label next = 0;
    LabelMap out(w, h, 0);
    for (std::size_t i = 0; i < provisional.size(); ++i) {
        if (provisional[i] == 0) continue;
        const Label root = sets.find(provisional[i]);
        if (final_label[root] == 0) final_label[root] = ++next;
        out[i] = final_label[root];
    }
    return out;
}

inline std::vector<std::uint64_t> label_areas(const LabelMap& labels) {
    std::vector<std::uint64_t> area(static_cast<std::size_t>(max_label(labels)) + 1, 0);
    for (Label v : labels.pixels()) ++area[v];
    return area;
}

/// Drops instances with area < min_area and renumbers the rest in order.
inline LabelMap filter_min_area(const LabelMap& labels, std::uint64_t min_area) {
    const auto area = label_areas(labels);
    std::vector<Label> remap(area.size(), 0);
    Label next = 0;
    for (std::size_t k = 1; k < area.size(); ++k)
        if (area[k] > 0 && area[k] >= min_area) remap[k] = ++next;
    LabelMap out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
    return out;
}

struct InstanceStats {
    Label label = 0;
    std::uint64_t area = 0;
    double equivalent_diameter = 0.0;
    Point2 centroid;
    std::uint64_t perimeter = 0;
    double rba = 0.0;
};

/// Perimeter counts pixels with a 4-neighbour of another label or the image edge.
inline std::vector<InstanceStats> measure_instances(const LabelMap& labels) {
    const Label n = max_label(labels);
    std::vector<InstanceStats> stats(n);
    std::vector<double> sx(n, 0.0);
    std::vector<double> sy(n, 0.0);
    const int w = labels.width();
    const int h = labels.height();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Label l = labels(x, y);
            if (l == 0) continue;
            auto& s = stats[l - 1];
            ++s.area;
            sx[l - 1] += x;
            sy[l - 1] += y;
            const bool boundary = x == 0 || y == 0 || x == w - 1 || y == h - 1 ||
                                  labels(x - 1, y) != l || labels(x + 1, y) != l ||
                                  labels(x, y - 1) != l || labels(x, y + 1) != l;
            if (boundary) ++s.perimeter;
        }
    std::vector<InstanceStats> out;
    out.reserve(n);
    for (Label k = 0; k < n; ++k) {
        auto s = stats[k];
        if (s.area == 0) continue;
        s.label = k + 1;
        const double a = static_cast<double>(s.area);
        s.equivalent_diameter = 2.0 * std::sqrt(a / std::numbers::pi);
        s.centroid = {sx[k] / a, sy[k] / a};
        s.rba = static_cast<double>(s.perimeter) / a;
        out.push_back(s);
    }
    return out;
}

/// Analytic boundary/area ratio: 2/r, (2l + 2w)/(l w), 4/a (concavity ignored).
inline double compute_rba(const ParticleShape& shape) {
    validate_shape(shape);
    return std::visit(
        [](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) return 2.0 / s.radius;
            else if constexpr (std::is_same_v<S, Rod>)
                return (2.0 * s.length + 2.0 * s.width) / (s.length * s.width);
            else return 4.0 / s.edge;
        },
        shape);
}

}  // namespace nanoseg

#endif  // NANOSEG_SEGMENT_HPP
