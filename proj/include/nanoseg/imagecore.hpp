#ifndef NANOSEG_IMAGECORE_HPP
#define NANOSEG_IMAGECORE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nanoseg {

/// Row-major single-channel raster. Pixel (x, y) lives at data[y * width + x].
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(checked_size(width, height), fill) {}

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height))
            throw std::invalid_argument("raster: pixel count does not match width x height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Raster&) const = default;

private:
    static std::size_t checked_size(int width, int height) {
        if (width < 0 || height < 0)
            throw std::invalid_argument("raster: negative dimension");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Intensities normalized to [0, 1].
using Image = Raster<double>;

/// 0 is background, k > 0 is instance k. Compact maps use exactly {1..N}.
using LabelMap = Raster<std::uint32_t>;

/// 1 marks foreground.
using BinaryMask = Raster<std::uint8_t>;

using Label = std::uint32_t;

inline constexpr int kHistogramBins = 256;

/// Round-half-up quantization of a [0,1] intensity onto 0..max_level.
inline std::uint32_t quantize(double v, std::uint32_t max_level) noexcept {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint32_t>(std::floor(clamped * max_level + 0.5));
}

inline int quantize8(double v) noexcept { return static_cast<int>(quantize(v, 255)); }

inline Image clamped(Image img) {
    for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

struct IntensityHistogram {
    std::array<std::uint64_t, kHistogramBins> bins{};
    std::uint64_t total = 0;

    int modal_bin(int first = 0, int last = kHistogramBins - 1) const {
        int best = first;
        for (int b = first; b <= last; ++b)
            if (bins[b] > bins[best]) best = b;
        return best;
    }
};

inline IntensityHistogram compute_histogram(const Image& img) {
    IntensityHistogram h;
    for (double v : img.pixels()) ++h.bins[quantize8(v)];
    h.total = img.size();
    return h;
}

/// Histogram rendered as CSV with a `bin,count` header.
inline std::string histogram_csv(const IntensityHistogram& h) {
    std::string out = "bin,count\n";
    for (int b = 0; b < kHistogramBins; ++b)
        out += std::to_string(b) + ',' + std::to_string(h.bins[b]) + '\n';
    return out;
}

struct ImageStats {
    double mean = 0.0;
    double std = 0.0;  // population convention
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

enum class Region { foreground, background };

namespace detail {

template <typename Pred>
ImageStats stats_where(const Image& img, Pred&& take) {
    ImageStats s;
    double sum = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!take(i)) continue;
        const double v = img[i];
        if (s.count == 0) {
            lo = hi = v;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        sum += v;
        ++s.count;
    }
    if (s.count == 0) return s;
    s.mean = sum / static_cast<double>(s.count);
    // Two-pass variance keeps exact-arithmetic images exact.
    double ss = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!take(i)) continue;
        const double d = img[i] - s.mean;
        ss += d * d;
    }
    s.std = std::sqrt(ss / static_cast<double>(s.count));
    s.min = lo;
    s.max = hi;
    return s;
}

}  // namespace detail

inline ImageStats image_stats(const Image& img) {
    return detail::stats_where(img, [](std::size_t) { return true; });
}

/// Statistics over the foreground (label != 0) or background (label == 0)
/// pixels of `mask`. An empty selection yields count == 0 and zeroed fields.
inline ImageStats image_stats(const Image& img, const LabelMap& mask, Region region) {
    if (!img.same_shape(mask))
        throw std::invalid_argument("image_stats: mask dimensions do not match image");
    const bool fg = region == Region::foreground;
    return detail::stats_where(img, [&](std::size_t i) { return (mask[i] != 0) == fg; });
}

inline BinaryMask binarize(const LabelMap& labels) {
    BinaryMask m(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] != 0 ? 1 : 0;
    return m;
}

inline Label max_label(const LabelMap& labels) {
    Label m = 0;
    for (Label v : labels.pixels()) m = std::max(m, v);
    return m;
}

/// True when the nonzero labels present are exactly {1..N}.
inline bool is_compact(const LabelMap& labels) {
    const Label n = max_label(labels);
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    for (Label v : labels.pixels()) seen[v] = true;
    for (Label k = 1; k <= n; ++k)
        if (!seen[k]) return false;
    return true;
}

/// Renumbers nonzero labels to 1..N preserving their ascending order.
inline LabelMap compact_labels(const LabelMap& labels) {
    const Label n = max_label(labels);
    std::vector<Label> remap(static_cast<std::size_t>(n) + 1, 0);
    for (Label v : labels.pixels()) remap[v] = 1;
    remap[0] = 0;
    Label next = 0;
    for (Label k = 1; k <= n; ++k)
        if (remap[k] != 0) remap[k] = ++next;
    LabelMap out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
    return out;
}

}  // namespace nanoseg

#endif  // NANOSEG_IMAGECORE_HPP
