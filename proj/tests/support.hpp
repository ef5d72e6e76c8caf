#ifndef NANOSEG_TESTS_SUPPORT_HPP
#define NANOSEG_TESTS_SUPPORT_HPP

// Generators and brute-force reference implementations used as test oracles.
// None of these call into the library's algorithms.

#include <nanoseg/imagecore.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace nanoseg::testkit {

inline Image random_image(int w, int h, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h);
    for (double& v : img.pixels()) v = u(rng);
    return img;
}

/// Image whose pixels sit exactly on 8-bit levels drawn from a few random clusters,
/// so histograms have gaps and uneven modes.
inline Image random_level_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nclusters(1, 4);
    std::uniform_int_distribution<int> centre(0, 255);
    std::uniform_int_distribution<int> spread(0, 40);
    const int k = nclusters(rng);
    std::vector<std::pair<int, int>> clusters;
    for (int i = 0; i < k; ++i) clusters.emplace_back(centre(rng), spread(rng));
    std::uniform_int_distribution<int> pick(0, k - 1);
    Image img(w, h);
    for (double& v : img.pixels()) {
        const auto [c, s] = clusters[static_cast<std::size_t>(pick(rng))];
        std::uniform_int_distribution<int> jitter(-s, s);
        v = std::clamp(c + jitter(rng), 0, 255) / 255.0;
    }
    return img;
}

/// Blobby binary mask: thresholded sum of random discs plus salt noise.
inline BinaryMask random_mask(int w, int h, std::mt19937_64& rng, double density = 0.45) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BinaryMask m(w, h, 0);
    const int discs = 3 + static_cast<int>(u(rng) * 10);
    for (int d = 0; d < discs; ++d) {
        const double cx = u(rng) * w;
        const double cy = u(rng) * h;
        const double r = 1.0 + u(rng) * 8.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m(x, y) = 1;
    }
    for (auto& v : m.pixels())
        if (u(rng) < density * 0.3) v = static_cast<std::uint8_t>(1 - v);
    return m;
}

/// 8-bit level of each pixel by direct rounding, clamped.
inline int level_of(double v) {
    const double c = v < 0 ? 0 : (v > 1 ? 1 : v);
    return static_cast<int>(std::floor(c * 255.0 + 0.5));
}

/// Exhaustive Otsu: compares ω0 ω1 (μ0 − μ1)² across every t with exact
/// integer cross-multiplication; the first (smallest) maximizer wins.
inline int otsu_exhaustive(const Image& img) {
    std::array<std::int64_t, 256> hist{};
    for (double v : img.pixels()) ++hist[static_cast<std::size_t>(level_of(v))];
    std::int64_t n = 0;
    std::int64_t s = 0;
    for (int b = 0; b < 256; ++b) {
        n += hist[b];
        s += hist[b] * b;
    }
    // variance(t) ∝ (n s0 − n0 s)² / (n0 n1)
    int best = -1;
    __int128 best_num = 0;
    __int128 best_den = 1;
    for (int t = 0; t < 256; ++t) {
        std::int64_t n0 = 0;
        std::int64_t s0 = 0;
        for (int b = 0; b <= t; ++b) {
            n0 += hist[b];
            s0 += hist[b] * b;
        }
        const std::int64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const __int128 diff = static_cast<__int128>(n) * s0 - static_cast<__int128>(n0) * s;
        const __int128 num = diff * diff;
        const __int128 den = static_cast<__int128>(n0) * n1;
        if (best < 0 || num * best_den > best_num * den) {
            best = t;
            best_num = num;
            best_den = den;
        }
    }
    return best;
}

/// Breadth-first 8-connected flood fill, labels in raster order of each component's first pixel.
inline LabelMap flood_fill_labels(const BinaryMask& m) {
    LabelMap out(m.width(), m.height(), 0);
    Label next = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m(x, y) || out(x, y)) continue;
            ++next;
            std::queue<std::pair<int, int>> q;
            q.push({x, y});
            out(x, y) = next;
            while (!q.empty()) {
                const auto [cx, cy] = q.front();
                q.pop();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= m.width() || ny >= m.height()) continue;
                        if (m(nx, ny) && !out(nx, ny)) {
                            out(nx, ny) = next;
                            q.push({nx, ny});
                        }
                    }
            }
        }
    return out;
}

/// Reflect-101 by repeated folding.
inline int fold(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

inline double mirrored(const Image& img, int x, int y) {
    return img(fold(x, img.width()), fold(y, img.height()));
}

/// Textbook NLM: for every pixel and every search offset, sum the patch distance directly.
inline Image nlm_reference(const Image& img, int patch_r, int search_r, double h, double sigma) {
    Image out(img.width(), img.height());
    const double n = (2.0 * patch_r + 1) * (2.0 * patch_r + 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double wsum = 0.0;
            double vsum = 0.0;
            for (int oy = -search_r; oy <= search_r; ++oy)
                for (int ox = -search_r; ox <= search_r; ++ox) {
                    double d2 = 0.0;
                    for (int qy = -patch_r; qy <= patch_r; ++qy)
                        for (int qx = -patch_r; qx <= patch_r; ++qx) {
                            const double a = mirrored(img, x + qx, y + qy);
                            const double b = mirrored(img, x + ox + qx, y + oy + qy);
                            d2 += (a - b) * (a - b);
                        }
                    d2 /= n;
                    const double excess = std::max(d2 - 2.0 * sigma * sigma, 0.0);
                    const double w = h == 0.0 ? (excess == 0.0 ? 1.0 : 0.0) : std::exp(-excess / (h * h));
                    wsum += w;
                    vsum += w * mirrored(img, x + ox, y + oy);
                }
            out(x, y) = vsum / wsum;
        }
    return out;
}

/// Pixel centres (integer coordinates) strictly inside a disc.
inline std::uint64_t disc_pixel_count(double cx, double cy, double r, int w, int h) {
    std::uint64_t n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) ++n;
    return n;
}

/// Writes a filled axis-aligned rectangle of `label` into a map.
inline void paint_rect(LabelMap& m, int x0, int y0, int w, int h, Label label) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) m(x, y) = label;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("nanoseg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace nanoseg::testkit

#endif  // NANOSEG_TESTS_SUPPORT_HPP
