#ifndef NANOSEG_SCENESIM_HPP
#define NANOSEG_SCENESIM_HPP

#include "imagecore.hpp"

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nanoseg {

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Sphere {
    double radius = 25.0;
    bool operator==(const Sphere&) const = default;
};

/// Cylinder of diameter `width` capped with hemispheres; `length` is tip to tip.
struct Rod {
    double length = 65.0;
    double width = 10.0;
    double orientation = 0.0;  // radians, angle of the long axis from +x
    bool operator==(const Rod&) const = default;
};

/// Cube of edge `edge` with a spherical-cap dip of depth
/// concavity * edge in the face seen by the beam.
struct ConcaveCube {
    double edge = 50.0;
    double concavity = 0.2;
    double orientation = 0.0;  // radians, in-plane rotation of the face
    bool operator==(const ConcaveCube&) const = default;
};

using ParticleShape = std::variant<Sphere, Rod, ConcaveCube>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct ParticleSpec {
    ParticleShape shape;
    Point2 center;
    bool operator==(const ParticleSpec&) const = default;
};

inline void validate_shape(const ParticleShape& shape) {
    std::visit(
        [](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) {
                if (!(s.radius > 0)) throw std::invalid_argument("sphere radius must be > 0");
            } else if constexpr (std::is_same_v<S, Rod>) {
                if (!(s.width > 0) || !(s.length > s.width))
                    throw std::invalid_argument("rod requires length > width > 0");
            } else {
                if (!(s.edge > 0)) throw std::invalid_argument("cube edge must be > 0");
                if (!(s.concavity >= 0 && s.concavity <= 0.5))
                    throw std::invalid_argument("cube concavity must lie in [0, 0.5]");
            }
        },
        shape);
}

namespace geometry {

struct Box {
    double x0, y0, x1, y1;
};

/// Half extents of the footprint's axis-aligned bounding box.
inline Point2 half_extent(const ParticleShape& shape) {
    return std::visit(
        [](const auto& s) -> Point2 {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) {
                return {s.radius, s.radius};
            } else if constexpr (std::is_same_v<S, Rod>) {
                const double half_axis = 0.5 * (s.length - s.width);
                const double r = 0.5 * s.width;
                return {std::abs(std::cos(s.orientation)) * half_axis + r,
                        std::abs(std::sin(s.orientation)) * half_axis + r};
            } else {
                const double h = 0.5 * s.edge * (std::abs(std::cos(s.orientation)) + std::abs(std::sin(s.orientation)));
                return {h, h};
            }
        },
        shape);
}

inline Box bounds(const ParticleSpec& p) {
    const Point2 h = half_extent(p.shape);
    return {p.center.x - h.x, p.center.y - h.y, p.center.x + h.x, p.center.y + h.y};
}

/// Radius of a circle around the centre enclosing the whole footprint.
inline double bounding_radius(const ParticleShape& shape) {
    return std::visit(
        [](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) return s.radius;
            else if constexpr (std::is_same_v<S, Rod>) return 0.5 * s.length;
            else return 0.5 * std::numbers::sqrt2 * s.edge;
        },
        shape);
}

/// Distance from (dx, dy) to the rod's axis segment.
inline double rod_axis_distance(const Rod& r, double dx, double dy) {
    const double c = std::cos(r.orientation);
    const double s = std::sin(r.orientation);
    const double along = dx * c + dy * s;
    const double across = -dx * s + dy * c;
    const double half_axis = 0.5 * (r.length - r.width);
    const double beyond = std::max(std::abs(along) - half_axis, 0.0);
    return std::hypot(beyond, across);
}

/// Offset (dx, dy) expressed in the cube's face frame.
inline Point2 cube_frame(const ConcaveCube& c, double dx, double dy) {
    const double cs = std::cos(c.orientation);
    const double sn = std::sin(c.orientation);
    return {dx * cs + dy * sn, -dx * sn + dy * cs};
}

/// Whether the offset (dx, dy) from the particle centre lies strictly inside the footprint.
inline bool contains(const ParticleShape& shape, double dx, double dy) {
    return std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) {
                return dx * dx + dy * dy < s.radius * s.radius;
            } else if constexpr (std::is_same_v<S, Rod>) {
                return rod_axis_distance(s, dx, dy) < 0.5 * s.width;
            } else {
                const Point2 q = cube_frame(s, dx, dy);
                return std::abs(q.x) < 0.5 * s.edge && std::abs(q.y) < 0.5 * s.edge;
            }
        },
        shape);
}

/// Projected thickness along the beam (pixel units) at offset (dx, dy).
inline double thickness(const ParticleShape& shape, double dx, double dy) {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) {
                const double q = s.radius * s.radius - dx * dx - dy * dy;
                return q > 0 ? 2.0 * std::sqrt(q) : 0.0;
            } else if constexpr (std::is_same_v<S, Rod>) {
                const double half_w = 0.5 * s.width;
                const double d = rod_axis_distance(s, dx, dy);
                const double q = half_w * half_w - d * d;
                return q > 0 ? 2.0 * std::sqrt(q) : 0.0;
            } else {
                const double half = 0.5 * s.edge;
                const Point2 q = cube_frame(s, dx, dy);
                if (std::abs(q.x) >= half || std::abs(q.y) >= half) return 0.0;
                const double depth = s.concavity * s.edge;
                if (depth <= 0) return s.edge;
                // Cap of a sphere of radius R whose base circle (radius edge/2) spans the face.
                const double radius = (half * half + depth * depth) / (2.0 * depth);
                const double rho2 = dx * dx + dy * dy;
                if (rho2 >= half * half) return s.edge;
                const double dip = std::sqrt(radius * radius - rho2) - (radius - depth);
                return s.edge - std::max(dip, 0.0);
            }
        },
        shape);
}

inline double max_thickness(const ParticleShape& shape) {
    return std::visit(
        [](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) return 2.0 * s.radius;
            else if constexpr (std::is_same_v<S, Rod>) return s.width;
            else return s.edge;
        },
        shape);
}

inline double footprint_area(const ParticleShape& shape) {
    return std::visit(
        [](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>) {
                return std::numbers::pi * s.radius * s.radius;
            } else if constexpr (std::is_same_v<S, Rod>) {
                const double r = 0.5 * s.width;
                return (s.length - s.width) * s.width + std::numbers::pi * r * r;
            } else {
                return s.edge * s.edge;
            }
        },
        shape);
}

}  // namespace geometry

// ---------------------------------------------------------------------------
// Scene description
// ---------------------------------------------------------------------------

enum class ShapeFamily { sphere, rod, cube };

/// Random scene request. `size_mean`/`size_std` describe the sphere diameter,
/// the rod length or the cube edge depending on the family.
struct SamplerRequest {
    int count = 24;
    ShapeFamily family = ShapeFamily::sphere;
    double size_mean = 50.0;
    double size_std = 0.0;
    double rod_width = 10.0;
    double concavity = 0.2;
    bool operator==(const SamplerRequest&) const = default;
};

struct SceneSpec {
    int width = 512;
    int height = 512;
    double pixel_size = 1.0;  // nm per pixel
    std::vector<ParticleSpec> particles;
    std::optional<SamplerRequest> sampler;  // used when `particles` is empty
    double dose_rate = 1000.0;              // e / (A^2 s)
    double exposure = 0.1;                  // s
    double sin_thickness = 50.0;            // nm, each of two windows
    double liquid_thickness = 100.0;        // nm
    double background_texture_amplitude = 0.005;
    /// Thickness scale (nm) of the saturating HAADF response; nullopt = linear.
    std::optional<double> saturation_thickness = 4.0;
    std::optional<double> target_snr;  // nullopt: no Gaussian noise
    std::uint64_t seed = 0;

    bool operator==(const SceneSpec&) const = default;
};

inline void validate_scene(const SceneSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0)
        throw std::invalid_argument("scene dimensions must be positive");
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(spec.pixel_size, "pixel_size");
    positive(spec.dose_rate, "dose_rate");
    positive(spec.exposure, "exposure");
    positive(spec.sin_thickness, "sin_thickness");
    positive(spec.liquid_thickness, "liquid_thickness");
    if (spec.background_texture_amplitude < 0)
        throw std::invalid_argument("background_texture_amplitude must be >= 0");
    if (spec.saturation_thickness) positive(*spec.saturation_thickness, "saturation_thickness");
    if (spec.target_snr) positive(*spec.target_snr, "target_snr");
    if (spec.sampler) {
        if (spec.sampler->count < 0) throw std::invalid_argument("sampler count must be >= 0");
        positive(spec.sampler->size_mean, "sampler size_mean");
        if (spec.sampler->size_std < 0) throw std::invalid_argument("sampler size_std must be >= 0");
    }
    for (const auto& p : spec.particles) validate_shape(p.shape);
}

struct NoiseRecord {
    double sigma_gaussian = 0.0;
    double mu_foreground_clean = 0.0;
    double achieved_snr = std::numeric_limits<double>::infinity();
    bool operator==(const NoiseRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// One independent stream per stochastic stage; the scene seed determines all of them.
enum class Stream : std::uint32_t { placement = 1, texture = 2, shot = 3, gaussian = 4 };

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class PlacementError : public std::runtime_error {
public:
    PlacementError(int requested, int achieved)
        : std::runtime_error("could only place " + std::to_string(achieved) + " of " +
                             std::to_string(requested) + " particles"),
          requested_(requested), achieved_(achieved) {}
    int requested() const noexcept { return requested_; }
    int achieved() const noexcept { return achieved_; }

private:
    int requested_;
    int achieved_;
};

class SceneError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kPlacementAttempts = 100000;
inline constexpr double kPlacementGap = 2.0;
inline constexpr double kPeakIntensity = 0.95;
inline constexpr double kBackgroundAttenuation = 0.001;  // intensity per nm of window + liquid
inline constexpr int kSupersampling = 4;
inline constexpr double kTextureSpacing = 64.0;  // lattice spacing of the background texture

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline bool in_bounds(const ParticleSpec& p, int width, int height) {
    const auto b = geometry::bounds(p);
    return b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= width - 1.0 && b.y1 <= height - 1.0;
}

/// Returns `spec.particles` verbatim, or draws `sampler.count` separated
/// particles. Deterministic for a fixed seed.
inline std::vector<ParticleSpec> sample_scene(const SceneSpec& spec) {
    if (!spec.particles.empty() || !spec.sampler) return spec.particles;
    const SamplerRequest& req = *spec.sampler;
    std::vector<ParticleSpec> out;
    if (req.count == 0) return out;
    out.reserve(static_cast<std::size_t>(req.count));

    Rng rng = make_stream(spec.seed, Stream::placement);
    std::normal_distribution<double> size_dist(req.size_mean, req.size_std);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto draw_size = [&](double lower) {
        if (req.size_std == 0.0) return req.size_mean;
        for (;;) {
            const double s = size_dist(rng);
            if (s > lower) return s;
        }
    };
    auto draw_shape = [&]() -> ParticleShape {
        switch (req.family) {
        case ShapeFamily::sphere:
            return Sphere{0.5 * draw_size(0.0)};
        case ShapeFamily::rod:
            return Rod{draw_size(req.rod_width), req.rod_width, unit(rng) * std::numbers::pi};
        case ShapeFamily::cube:
            return ConcaveCube{draw_size(0.0), req.concavity, unit(rng) * 0.5 * std::numbers::pi};
        }
        return Sphere{};
    };

    int attempts = 0;
    while (static_cast<int>(out.size()) < req.count) {
        if (attempts++ >= kPlacementAttempts)
            throw PlacementError(req.count, static_cast<int>(out.size()));
        ParticleShape shape = draw_shape();
        validate_shape(shape);
        const Point2 h = geometry::half_extent(shape);
        const double span_x = spec.width - 1.0 - 2.0 * h.x;
        const double span_y = spec.height - 1.0 - 2.0 * h.y;
        if (span_x < 0 || span_y < 0) continue;
        ParticleSpec candidate{shape, {h.x + unit(rng) * span_x, h.y + unit(rng) * span_y}};
        const double r = geometry::bounding_radius(shape);
        bool clear = true;
        for (const auto& other : out) {
            const double gap = r + geometry::bounding_radius(other.shape) + kPlacementGap;
            if (std::hypot(candidate.center.x - other.center.x,
                           candidate.center.y - other.center.y) <= gap) {
                clear = false;
                break;
            }
        }
        if (clear) out.push_back(std::move(candidate));
    }
    return out;
}

/// HAADF response to a projected thickness in nm.
inline double haadf_response(double thickness_nm, const std::optional<double>& saturation) {
    if (!saturation) return thickness_nm;
    return -std::expm1(-thickness_nm / *saturation);
}

struct RenderedScene {
    Image clean;
    LabelMap truth;
};

/// Noise-free image plus exact ground truth. Labels follow list order.
inline RenderedScene render_scene(const SceneSpec& spec, const std::vector<ParticleSpec>& particles) {
    RenderedScene out{Image(spec.width, spec.height, 0.0), LabelMap(spec.width, spec.height, 0)};
    if (particles.empty()) return out;

    double peak = 0.0;
    for (const auto& p : particles) {
        validate_shape(p.shape);
        if (!in_bounds(p, spec.width, spec.height))
            throw SceneError("particle footprint leaves the image bounds");
        peak = std::max(peak, haadf_response(geometry::max_thickness(p.shape) * spec.pixel_size,
                                             spec.saturation_thickness));
    }
    const double scale = kPeakIntensity / peak;

    constexpr int ss = kSupersampling;
    for (std::size_t k = 0; k < particles.size(); ++k) {
        const auto& p = particles[k];
        const auto box = geometry::bounds(p);
        const int x0 = std::max(0, static_cast<int>(std::floor(box.x0)) - 1);
        const int y0 = std::max(0, static_cast<int>(std::floor(box.y0)) - 1);
        const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(box.x1)) + 1);
        const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(box.y1)) + 1);
        bool covered = false;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.center.x;
                const double dy = y - p.center.y;
                double acc = 0.0;
                for (int sy = 0; sy < ss; ++sy)
                    for (int sx = 0; sx < ss; ++sx) {
                        const double ox = (sx + 0.5) / ss - 0.5;
                        const double oy = (sy + 0.5) / ss - 0.5;
                        const double t = geometry::thickness(p.shape, dx + ox, dy + oy);
                        if (t > 0) acc += haadf_response(t * spec.pixel_size, spec.saturation_thickness);
                    }
                out.clean(x, y) += scale * acc / (ss * ss);
                if (geometry::contains(p.shape, dx, dy)) {
                    if (out.truth(x, y) != 0)
                        throw SceneError("particles " + std::to_string(out.truth(x, y)) + " and " +
                                         std::to_string(k + 1) + " overlap");
                    out.truth(x, y) = static_cast<Label>(k + 1);
                    covered = true;
                }
            }
        }
        if (!covered)
            throw SceneError("particle " + std::to_string(k + 1) + " covers no pixel centre");
    }
    out.clean = clamped(std::move(out.clean));
    return out;
}

/// Zero-mean band-limited field with max |value| == amplitude: cubic B-spline
/// interpolation of Gaussian lattice values spaced kTextureSpacing pixels apart.
inline Image background_texture(int width, int height, double amplitude, Rng& rng) {
    Image field(width, height, 0.0);
    if (amplitude <= 0 || width == 0 || height == 0) return field;
    const int nx = static_cast<int>(std::ceil(width / kTextureSpacing)) + 4;
    const int ny = static_cast<int>(std::ceil(height / kTextureSpacing)) + 4;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> lattice(static_cast<std::size_t>(nx) * ny);
    for (double& v : lattice) v = normal(rng);

    auto bspline = [](double t, double w[4]) {
        const double t2 = t * t;
        const double t3 = t2 * t;
        w[0] = (1 - 3 * t + 3 * t2 - t3) / 6.0;
        w[1] = (4 - 6 * t2 + 3 * t3) / 6.0;
        w[2] = (1 + 3 * t + 3 * t2 - 3 * t3) / 6.0;
        w[3] = t3 / 6.0;
    };
    double sum = 0.0;
    for (int y = 0; y < height; ++y) {
        const double gy = y / kTextureSpacing;
        const int iy = static_cast<int>(gy);
        double wy[4];
        bspline(gy - iy, wy);
        for (int x = 0; x < width; ++x) {
            const double gx = x / kTextureSpacing;
            const int ix = static_cast<int>(gx);
            double wx[4];
            bspline(gx - ix, wx);
            double v = 0.0;
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 4; ++i)
                    v += wy[j] * wx[i] * lattice[static_cast<std::size_t>(iy + j) * nx + ix + i];
            field(x, y) = v;
            sum += v;
        }
    }
    const double mean = sum / static_cast<double>(field.size());
    double peak = 0.0;
    for (double& v : field.pixels()) {
        v -= mean;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0)
        for (double& v : field.pixels()) v *= amplitude / peak;
    return field;
}

inline double background_offset(const SceneSpec& spec) {
    return kBackgroundAttenuation * (2.0 * spec.sin_thickness + spec.liquid_thickness);
}

/// Adds the window + liquid pedestal and a smooth texture; clamped output.
inline Image add_background(Image img, const SceneSpec& spec, Rng& rng) {
    const double offset = background_offset(spec);
    const Image texture =
        background_texture(img.width(), img.height(), spec.background_texture_amplitude, rng);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::clamp(img[i] + offset + texture[i], 0.0, 1.0);
    return img;
}

/// Electrons collected per pixel: dose_rate * (pixel size in A)^2 * exposure.
inline double electrons_per_pixel(const SceneSpec& spec) {
    const double pixel_angstrom = spec.pixel_size * 10.0;
    return spec.dose_rate * pixel_angstrom * pixel_angstrom * spec.exposure;
}

inline Image add_shot_noise(Image img, const SceneSpec& spec, Rng& rng) {
    const double n = electrons_per_pixel(spec);
    if (!(n > 0)) throw std::invalid_argument("add_shot_noise: electrons per pixel must be > 0");
    std::poisson_distribution<std::int64_t> poisson;
    using param = std::poisson_distribution<std::int64_t>::param_type;
    for (double& v : img.pixels()) {
        const double mean = v * n;
        if (mean <= 0) {
            v = 0.0;
            continue;
        }
        v = std::clamp(static_cast<double>(poisson(rng, param(mean))) / n, 0.0, 1.0);
    }
    return img;
}

struct NoisyImage {
    Image image;
    NoiseRecord record;
};

/// Adds N(0, sigma) with sigma = mean foreground intensity / target_snr.
/// A nullopt or infinite target leaves the image untouched.
inline NoisyImage add_gaussian_noise_for_snr(Image img, const LabelMap& truth,
                                             std::optional<double> target_snr, Rng& rng) {
    if (!img.same_shape(truth))
        throw std::invalid_argument("add_gaussian_noise_for_snr: truth dimensions do not match");
    const ImageStats fg = image_stats(img, truth, Region::foreground);
    if (fg.count == 0) throw std::invalid_argument("add_gaussian_noise_for_snr: empty foreground");
    NoiseRecord record;
    record.mu_foreground_clean = fg.mean;
    if (!target_snr || std::isinf(*target_snr)) return {std::move(img), record};
    if (!(*target_snr > 0))
        throw std::invalid_argument("add_gaussian_noise_for_snr: target SNR must be > 0");
    record.sigma_gaussian = fg.mean / *target_snr;
    record.achieved_snr = record.sigma_gaussian > 0 ? fg.mean / record.sigma_gaussian
                                                    : std::numeric_limits<double>::infinity();
    std::normal_distribution<double> normal(0.0, record.sigma_gaussian);
    for (double& v : img.pixels()) v = std::clamp(v + normal(rng), 0.0, 1.0);
    return {std::move(img), record};
}

/// Background pixels at Chebyshev distance > guard from every foreground pixel.
inline LabelMap background_beyond(const LabelMap& truth, int guard) {
    LabelMap mask(truth.width(), truth.height(), 0);  // 1 = pure background
    const int w = truth.width();
    const int h = truth.height();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool clear = truth(x, y) == 0;
            for (int dy = -guard; clear && dy <= guard; ++dy)
                for (int dx = -guard; clear && dx <= guard; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h && truth(nx, ny) != 0) clear = false;
                }
            mask(x, y) = clear ? 1 : 0;
        }
    return mask;
}

inline constexpr int kSnrGuardBand = 1;

/// mean(foreground) / std(background); +infinity when the background is flat.
/// Background pixels within `guard` px of a particle are skipped: their
/// anti-aliased intensity carries particle signal.
inline double measure_snr(const Image& img, const LabelMap& truth, int guard = kSnrGuardBand) {
    const ImageStats fg = image_stats(img, truth, Region::foreground);
    const ImageStats bg = image_stats(img, background_beyond(truth, guard), Region::foreground);
    if (fg.count == 0) throw std::invalid_argument("measure_snr: no foreground pixels");
    if (bg.count == 0) throw std::invalid_argument("measure_snr: no background pixels");
    if (bg.std == 0.0) return std::numeric_limits<double>::infinity();
    return fg.mean / bg.std;
}

struct SceneRealization {
    std::vector<ParticleSpec> particles;
    Image clean;
    LabelMap truth;
    Image noisy;
    NoiseRecord noise;
};

/// clean -> background -> shot noise -> Gaussian noise (when target_snr is set).
inline SceneRealization simulate_scene(const SceneSpec& spec) {
    validate_scene(spec);
    SceneRealization s;
    s.particles = sample_scene(spec);
    auto rendered = render_scene(spec, s.particles);
    s.clean = std::move(rendered.clean);
    s.truth = std::move(rendered.truth);

    Rng texture_rng = make_stream(spec.seed, Stream::texture);
    Rng shot_rng = make_stream(spec.seed, Stream::shot);
    Rng gauss_rng = make_stream(spec.seed, Stream::gaussian);
    Image img = add_background(s.clean, spec, texture_rng);
    img = add_shot_noise(std::move(img), spec, shot_rng);
    if (spec.target_snr && !s.particles.empty()) {
        auto noisy = add_gaussian_noise_for_snr(std::move(img), s.truth, spec.target_snr, gauss_rng);
        s.noisy = std::move(noisy.image);
        s.noise = noisy.record;
    } else {
        s.noisy = std::move(img);
        if (!s.particles.empty())
            s.noise.mu_foreground_clean = image_stats(s.noisy, s.truth, Region::foreground).mean;
    }
    return s;
}

}  // namespace nanoseg

#endif  // NANOSEG_SCENESIM_HPP
