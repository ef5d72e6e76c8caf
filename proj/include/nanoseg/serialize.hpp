#ifndef NANOSEG_SERIALIZE_HPP
#define NANOSEG_SERIALIZE_HPP

#include "denoise.hpp"
#include "evaluate.hpp"
#include "scenesim.hpp"
#include "segment.hpp"

#include <json.hpp>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace nanoseg {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolName = "nanoseg";
inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.contains(key)) throw ConfigError(std::string(what) + ": unknown field '" + key + "'");
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("field '") + key + "': " + e.what());
        }
    }
}

/// Infinite or unset values are written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json optional_number(const std::optional<double>& v) {
    return v ? finite_or_null(*v) : json(nullptr);
}

inline std::optional<double> read_optional_number(const json& j, const char* key,
                                                  std::optional<double> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw ConfigError(std::string("field '") + key + "' must be a number or null");
    return v.get<double>();
}

}  // namespace detail

// --- geometry --------------------------------------------------------------

inline json to_json_value(const ParticleSpec& p) {
    json j = std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Sphere>)
                return {{"shape", "sphere"}, {"radius", s.radius}};
            else if constexpr (std::is_same_v<S, Rod>)
                return {{"shape", "rod"}, {"length", s.length}, {"width", s.width},
                        {"orientation", s.orientation}};
            else
                return {{"shape", "concave_cube"}, {"edge", s.edge}, {"concavity", s.concavity},
                        {"orientation", s.orientation}};
        },
        p.shape);
    j["center"] = {p.center.x, p.center.y};
    return j;
}

inline ParticleSpec particle_from_json(const json& j) {
    if (!j.is_object() || !j.contains("shape")) throw ConfigError("particle: missing 'shape'");
    const std::string kind = j.at("shape").get<std::string>();
    ParticleSpec p;
    if (kind == "sphere") {
        detail::reject_unknown_keys(j, {"shape", "radius", "center"}, "sphere");
        Sphere s;
        detail::read_if(j, "radius", s.radius);
        p.shape = s;
    } else if (kind == "rod") {
        detail::reject_unknown_keys(j, {"shape", "length", "width", "orientation", "center"}, "rod");
        Rod s;
        detail::read_if(j, "length", s.length);
        detail::read_if(j, "width", s.width);
        detail::read_if(j, "orientation", s.orientation);
        p.shape = s;
    } else if (kind == "concave_cube") {
        detail::reject_unknown_keys(j, {"shape", "edge", "concavity", "orientation", "center"}, "concave_cube");
        ConcaveCube s;
        detail::read_if(j, "edge", s.edge);
        detail::read_if(j, "concavity", s.concavity);
        detail::read_if(j, "orientation", s.orientation);
        p.shape = s;
    } else {
        throw ConfigError("particle: unknown shape '" + kind + "'");
    }
    if (!j.contains("center") || !j.at("center").is_array() || j.at("center").size() != 2)
        throw ConfigError("particle: 'center' must be [x, y]");
    p.center = {j.at("center")[0].get<double>(), j.at("center")[1].get<double>()};
    try {
        validate_shape(p.shape);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("particle: ") + e.what());
    }
    return p;
}

inline const char* family_name(ShapeFamily f) {
    switch (f) {
    case ShapeFamily::sphere: return "sphere";
    case ShapeFamily::rod: return "rod";
    case ShapeFamily::cube: return "concave_cube";
    }
    return "sphere";
}

inline ShapeFamily family_from_name(const std::string& name) {
    if (name == "sphere") return ShapeFamily::sphere;
    if (name == "rod") return ShapeFamily::rod;
    if (name == "concave_cube" || name == "cube") return ShapeFamily::cube;
    throw ConfigError("unknown shape family '" + name + "'");
}

inline json to_json_value(const SamplerRequest& s) {
    return {{"count", s.count},         {"shape", family_name(s.family)},
            {"size_mean", s.size_mean}, {"size_std", s.size_std},
            {"rod_width", s.rod_width}, {"concavity", s.concavity}};
}

inline SamplerRequest sampler_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"count", "shape", "size_mean", "size_std", "rod_width", "concavity"},
                                "sampler");
    SamplerRequest s;
    detail::read_if(j, "count", s.count);
    if (j.contains("shape")) s.family = family_from_name(j.at("shape").get<std::string>());
    detail::read_if(j, "size_mean", s.size_mean);
    detail::read_if(j, "size_std", s.size_std);
    detail::read_if(j, "rod_width", s.rod_width);
    detail::read_if(j, "concavity", s.concavity);
    return s;
}

// --- scene -----------------------------------------------------------------

inline json to_json_value(const SceneSpec& s) {
    json particles = json::array();
    for (const auto& p : s.particles) particles.push_back(to_json_value(p));
    return {{"schema_version", kSchemaVersion},
            {"width", s.width},
            {"height", s.height},
            {"pixel_size", s.pixel_size},
            {"particles", particles},
            {"sampler", s.sampler ? to_json_value(*s.sampler) : json(nullptr)},
            {"dose_rate", s.dose_rate},
            {"exposure", s.exposure},
            {"sin_thickness", s.sin_thickness},
            {"liquid_thickness", s.liquid_thickness},
            {"background_texture_amplitude", s.background_texture_amplitude},
            {"saturation_thickness", detail::optional_number(s.saturation_thickness)},
            {"target_snr", detail::optional_number(s.target_snr)},
            {"seed", s.seed}};
}

inline SceneSpec scene_from_json(const json& j) {
    detail::reject_unknown_keys(
        j, {"schema_version", "width", "height", "pixel_size", "particles", "sampler", "dose_rate",
            "exposure", "sin_thickness", "liquid_thickness", "background_texture_amplitude",
            "saturation_thickness", "target_snr", "seed"},
        "scene");
    if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
        throw ConfigError("scene: unsupported schema_version");
    SceneSpec s;
    detail::read_if(j, "width", s.width);
    detail::read_if(j, "height", s.height);
    detail::read_if(j, "pixel_size", s.pixel_size);
    if (j.contains("particles")) {
        if (!j.at("particles").is_array()) throw ConfigError("scene: 'particles' must be an array");
        for (const auto& p : j.at("particles")) s.particles.push_back(particle_from_json(p));
    }
    if (j.contains("sampler") && !j.at("sampler").is_null()) s.sampler = sampler_from_json(j.at("sampler"));
    detail::read_if(j, "dose_rate", s.dose_rate);
    detail::read_if(j, "exposure", s.exposure);
    detail::read_if(j, "sin_thickness", s.sin_thickness);
    detail::read_if(j, "liquid_thickness", s.liquid_thickness);
    detail::read_if(j, "background_texture_amplitude", s.background_texture_amplitude);
    s.saturation_thickness = detail::read_optional_number(j, "saturation_thickness", s.saturation_thickness);
    s.target_snr = detail::read_optional_number(j, "target_snr", s.target_snr);
    detail::read_if(j, "seed", s.seed);
    try {
        validate_scene(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
    return s;
}

inline json to_json_value(const NoiseRecord& n) {
    return {{"sigma_gaussian", n.sigma_gaussian},
            {"mu_foreground_clean", n.mu_foreground_clean},
            {"achieved_snr", detail::finite_or_null(n.achieved_snr)}};
}

// --- filters ---------------------------------------------------------------

inline json to_json_value(const GaussianParams& p) {
    return {{"type", "gaussian"}, {"sigma", p.sigma}, {"kernel_width", p.kernel_width},
            {"kernel_height", p.kernel_height}};
}

inline json to_json_value(const NlmParams& p) {
    return {{"type", "nlm"}, {"patch_radius", p.patch_radius}, {"search_radius", p.search_radius},
            {"h", detail::optional_number(p.h)}, {"sigma", detail::optional_number(p.sigma)}};
}

// --- segmentation / evaluation ---------------------------------------------

inline json to_json_value(const InstanceStats& s) {
    return {{"label", s.label},
            {"area", s.area},
            {"equivalent_diameter", s.equivalent_diameter},
            {"centroid", {s.centroid.x, s.centroid.y}},
            {"perimeter", s.perimeter},
            {"rba", s.rba}};
}

inline json instance_table_json(const std::vector<InstanceStats>& stats) {
    json rows = json::array();
    for (const auto& s : stats) rows.push_back(to_json_value(s));
    return rows;
}

inline json to_json_value(const SizeDistribution& d) {
    return {{"bin_width", d.bin_width}, {"counts", d.counts}, {"n", d.n},
            {"mean_area", d.mean_area}, {"std_area", d.std_area}};
}

inline json to_json_value(const EvaluationReport& r) {
    json pairs = json::array();
    for (const auto& p : r.matches.pairs) pairs.push_back({{"truth", p.truth}, {"pred", p.pred}, {"iou", p.iou}});
    return {{"tp", r.detection.tp},
            {"fp", r.detection.fp},
            {"fn", r.detection.fn},
            {"precision", r.detection.precision},
            {"recall", r.detection.recall},
            {"f1", r.detection.f1},
            {"pixel_accuracy", r.pixel_accuracy},
            {"mean_iou", r.mean_iou},
            {"instance_iou", r.instance_iou},
            {"matches", pairs},
            {"unmatched_truth", r.matches.unmatched_truth},
            {"unmatched_pred", r.matches.unmatched_pred},
            {"size_histogram",
             {{"predicted", to_json_value(r.predicted_sizes)}, {"truth", to_json_value(r.truth_sizes)}}},
            {"config", {{"iou_min", r.config.iou_min}, {"size_bin_width", r.config.size_bin_width}}}};
}

/// CSV with one row per area bin: bin_start,bin_end,predicted,truth.
inline std::string size_histogram_csv(const SizeDistribution& predicted, const SizeDistribution& truth) {
    const std::size_t bins = std::max(predicted.counts.size(), truth.counts.size());
    std::string out = "bin_start,bin_end,predicted,truth\n";
    auto count = [](const SizeDistribution& d, std::size_t b) {
        return b < d.counts.size() ? d.counts[b] : std::uint64_t{0};
    };
    for (std::size_t b = 0; b < bins; ++b) {
        const json lo = static_cast<double>(b) * predicted.bin_width;
        const json hi = static_cast<double>(b + 1) * predicted.bin_width;
        out += lo.dump() + ',' + hi.dump() + ',' + std::to_string(count(predicted, b)) + ',' +
               std::to_string(count(truth, b)) + '\n';
    }
    return out;
}

}  // namespace nanoseg

#endif  // NANOSEG_SERIALIZE_HPP
