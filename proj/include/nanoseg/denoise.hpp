#ifndef NANOSEG_DENOISE_HPP
#define NANOSEG_DENOISE_HPP

#include "imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace nanoseg {

struct GaussianParams {
    double sigma = 5.0;
    int kernel_width = 5;
    int kernel_height = 5;
    bool operator==(const GaussianParams&) const = default;
};

/// Unset `h` / `sigma` are estimated from the image: sigma from the noise
/// estimator below, h = kNlmStrengthFactor * sigma.
struct NlmParams {
    int patch_radius = 3;
    int search_radius = 10;
    std::optional<double> h;
    std::optional<double> sigma;
    bool operator==(const NlmParams&) const = default;
};

inline constexpr double kNlmStrengthFactor = 0.8;

/// Reflect-101 border index (gfedcb|abcdefgh|gfedcba) valid for any offset.
inline int mirror_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

/// exp(-i^2 / 2 sigma^2) on [-r, r], normalized to sum 1.
inline std::vector<double> gaussian_kernel_1d(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("gaussian kernel size must be odd and >= 1");
    if (!(sigma > 0)) throw std::invalid_argument("gaussian sigma must be > 0");
    const int r = size / 2;
    std::vector<double> k(static_cast<std::size_t>(size));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i + r)];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Separable Gaussian with mirror borders. Output clamped to [0, 1].
inline Image gaussian_blur(const Image& img, const GaussianParams& p = {}) {
    const auto kx = gaussian_kernel_1d(p.kernel_width, p.sigma);
    const auto ky = gaussian_kernel_1d(p.kernel_height, p.sigma);
    const int rx = p.kernel_width / 2;
    const int ry = p.kernel_height / 2;
    const int w = img.width();
    const int h = img.height();
    if (img.empty()) return img;

    Image tmp(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -rx; i <= rx; ++i)
                acc += kx[static_cast<std::size_t>(i + rx)] * img(mirror_index(x + i, w), y);
            tmp(x, y) = acc;
        }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -ry; j <= ry; ++j)
                acc += ky[static_cast<std::size_t>(j + ry)] * tmp(x, mirror_index(y + j, h));
            out(x, y) = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

/// Robust noise std: MAD of the residual x - mean(4-neighbours), rescaled for
/// the residual's variance inflation (1 + 4/16) under i.i.d. noise.
inline double estimate_noise_sigma(const Image& img) {
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3) return 0.0;
    std::vector<double> r;
    r.reserve(static_cast<std::size_t>(w - 2) * static_cast<std::size_t>(h - 2));
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x)
            r.push_back(img(x, y) - 0.25 * (img(x - 1, y) + img(x + 1, y) + img(x, y - 1) + img(x, y + 1)));
    auto median = [](std::vector<double>& v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    const double med = median(r);
    for (double& v : r) v = std::abs(v - med);
    return 1.4826 * median(r) / std::sqrt(1.25);
}

struct ResolvedNlm {
    int patch_radius;
    int search_radius;
    double h;
    double sigma;
};

inline ResolvedNlm resolve_nlm(const Image& img, const NlmParams& p) {
    if (p.patch_radius < 1 || p.search_radius < 1)
        throw std::invalid_argument("NLM radii must be >= 1");
    if (p.h && *p.h < 0) throw std::invalid_argument("NLM strength h must be >= 0");
    const double sigma = p.sigma ? *p.sigma : estimate_noise_sigma(img);
    const double h = p.h ? *p.h : kNlmStrengthFactor * sigma;
    return {p.patch_radius, p.search_radius, h, sigma};
}

/// exp(-max(d2 - 2 sigma^2, 0) / h^2); with h == 0 only exact matches count.
inline double nlm_weight(double d2, double sigma, double h) noexcept {
    const double excess = std::max(d2 - 2.0 * sigma * sigma, 0.0);
    if (h == 0.0) return excess == 0.0 ? 1.0 : 0.0;
    return std::exp(-excess / (h * h));
}

namespace detail {

/// Rows [y_begin, y_end) of the NLM output. Every output pixel accumulates
/// offsets in raster order and patch sums in a fixed column-then-row order,
/// so the result does not depend on how rows are split across threads.
inline void nlm_rows(const Image& img, const ResolvedNlm& p, int y_begin, int y_end, Image& out) {
    const int w = img.width();
    const int h = img.height();
    const int pr = p.patch_radius;
    const int sr = p.search_radius;
    const int pad = pr + sr;
    const int pw = w + 2 * pad;
    const int ph = (y_end - y_begin) + 2 * pad;
    // padded(x, y) holds the mirrored image at (x - pad, y_begin + y - pad).
    std::vector<double> padded(static_cast<std::size_t>(pw) * ph);
    for (int y = 0; y < ph; ++y) {
        const int sy = mirror_index(y_begin + y - pad, h);
        for (int x = 0; x < pw; ++x)
            padded[static_cast<std::size_t>(y) * pw + x] = img(mirror_index(x - pad, w), sy);
    }
    auto at = [&](int x, int y) { return padded[static_cast<std::size_t>(y + pad) * pw + (x + pad)]; };

    const int rows = y_end - y_begin;
    const int dw = w + 2 * pr;
    const int dh = rows + 2 * pr;
    const double patch_n = static_cast<double>((2 * pr + 1) * (2 * pr + 1));
    std::vector<double> diff(static_cast<std::size_t>(dw) * dh);
    std::vector<double> colsum(static_cast<std::size_t>(dw) * rows);
    std::vector<double> wsum(static_cast<std::size_t>(w) * rows, 0.0);
    std::vector<double> vsum(static_cast<std::size_t>(w) * rows, 0.0);

    for (int oy = -sr; oy <= sr; ++oy) {
        for (int ox = -sr; ox <= sr; ++ox) {
            // diff over local rows [-pr, rows + pr), columns [-pr, w + pr)
            for (int y = 0; y < dh; ++y)
                for (int x = 0; x < dw; ++x) {
                    const double d = at(x - pr, y - pr) - at(x - pr + ox, y - pr + oy);
                    diff[static_cast<std::size_t>(y) * dw + x] = d * d;
                }
            for (int y = 0; y < rows; ++y)
                for (int x = 0; x < dw; ++x) {
                    double s = 0.0;
                    for (int j = 0; j <= 2 * pr; ++j) s += diff[static_cast<std::size_t>(y + j) * dw + x];
                    colsum[static_cast<std::size_t>(y) * dw + x] = s;
                }
            for (int y = 0; y < rows; ++y)
                for (int x = 0; x < w; ++x) {
                    double s = 0.0;
                    for (int i = 0; i <= 2 * pr; ++i) s += colsum[static_cast<std::size_t>(y) * dw + x + i];
                    const double wt = nlm_weight(s / patch_n, p.sigma, p.h);
                    const std::size_t o = static_cast<std::size_t>(y) * w + x;
                    wsum[o] += wt;
                    vsum[o] += wt * at(x + ox, y + oy);
                }
        }
    }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t o = static_cast<std::size_t>(y) * w + x;
            out(x, y_begin + y) = std::clamp(vsum[o] / wsum[o], 0.0, 1.0);
        }
}

}  // namespace detail

/// Non-local means with mirror borders. `threads` == 0 picks the hardware
/// concurrency; the output is bit-identical for every thread count.
inline Image nlm_denoise(const Image& img, const NlmParams& params = {}, unsigned threads = 0) {
    const ResolvedNlm p = resolve_nlm(img, params);
    Image out(img.width(), img.height());
    if (img.empty()) return out;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(img.height()));
    // Bands of at least 16 rows keep the padded halo overhead small.
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(img.height() / 16 + 1)));
    if (threads == 1) {
        detail::nlm_rows(img, p, 0, img.height(), out);
        return out;
    }
    std::vector<std::jthread> workers;
    const int band = (img.height() + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (int y0 = 0; y0 < img.height(); y0 += band) {
        const int y1 = std::min(img.height(), y0 + band);
        workers.emplace_back([&img, &p, &out, y0, y1] { detail::nlm_rows(img, p, y0, y1, out); });
    }
    workers.clear();  // joins
    return out;
}

}  // namespace nanoseg

#endif  // NANOSEG_DENOISE_HPP
