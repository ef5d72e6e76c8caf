#ifndef NANOSEG_PIPELINE_HPP
#define NANOSEG_PIPELINE_HPP

#include "denoise.hpp"
#include "evaluate.hpp"
#include "image_io.hpp"
#include "plot.hpp"
#include "scenesim.hpp"
#include "segment.hpp"
#include "serialize.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nanoseg {

struct OtsuThreshold {
    bool operator==(const OtsuThreshold&) const = default;
};
struct FixedThreshold {
    int level = 128;
    bool operator==(const FixedThreshold&) const = default;
};
using ThresholdConfig = std::variant<OtsuThreshold, FixedThreshold>;
using DenoiserConfig = std::variant<std::monostate, GaussianParams, NlmParams>;

inline constexpr std::uint64_t kDefaultMinArea = 500;

/// Everything after scene generation: denoise -> threshold -> label -> filter -> evaluate.
struct PipelineSettings {
    DenoiserConfig denoiser;
    ThresholdConfig threshold;
    std::uint64_t min_area = kDefaultMinArea;
    EvalConfig eval;
};

struct PipelineConfig {
    SceneSpec scene;
    PipelineSettings settings;
    std::filesystem::path output_dir = "out";
};

/// A failure inside one pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// --- config (de)serialization ----------------------------------------------

inline json to_json_value(const DenoiserConfig& d) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, std::monostate>) return {{"type", "none"}};
            else return to_json_value(p);
        },
        d);
}

inline DenoiserConfig denoiser_from_json(const json& j) {
    const std::string type = j.value("type", "none");
    if (type == "none") {
        detail::reject_unknown_keys(j, {"type"}, "denoiser");
        return std::monostate{};
    }
    if (type == "gaussian") {
        detail::reject_unknown_keys(j, {"type", "sigma", "kernel_width", "kernel_height"}, "denoiser");
        GaussianParams p;
        detail::read_if(j, "sigma", p.sigma);
        detail::read_if(j, "kernel_width", p.kernel_width);
        detail::read_if(j, "kernel_height", p.kernel_height);
        if (!(p.sigma > 0) || p.kernel_width < 1 || p.kernel_width % 2 == 0 || p.kernel_height < 1 ||
            p.kernel_height % 2 == 0)
            throw ConfigError("denoiser: gaussian needs sigma > 0 and odd kernel sizes");
        return p;
    }
    if (type == "nlm") {
        detail::reject_unknown_keys(j, {"type", "patch_radius", "search_radius", "h", "sigma"}, "denoiser");
        NlmParams p;
        detail::read_if(j, "patch_radius", p.patch_radius);
        detail::read_if(j, "search_radius", p.search_radius);
        p.h = detail::read_optional_number(j, "h", std::nullopt);
        p.sigma = detail::read_optional_number(j, "sigma", std::nullopt);
        if (p.patch_radius < 1 || p.search_radius < 1 || (p.h && *p.h < 0))
            throw ConfigError("denoiser: nlm needs radii >= 1 and h >= 0");
        return p;
    }
    throw ConfigError("denoiser: unknown type '" + type + "'");
}

inline json to_json_value(const ThresholdConfig& t) {
    if (const auto* f = std::get_if<FixedThreshold>(&t)) return {{"type", "fixed"}, {"level", f->level}};
    return {{"type", "otsu"}};
}

inline ThresholdConfig threshold_from_json(const json& j) {
    const std::string type = j.value("type", "otsu");
    if (type == "otsu") {
        detail::reject_unknown_keys(j, {"type"}, "threshold");
        return OtsuThreshold{};
    }
    if (type == "fixed") {
        detail::reject_unknown_keys(j, {"type", "level"}, "threshold");
        FixedThreshold f;
        detail::read_if(j, "level", f.level);
        if (f.level < 0 || f.level > 255) throw ConfigError("threshold: level must be in [0, 255]");
        return f;
    }
    throw ConfigError("threshold: unknown type '" + type + "'");
}

inline json to_json_value(const PipelineSettings& s) {
    return {{"denoiser", to_json_value(s.denoiser)},
            {"threshold", to_json_value(s.threshold)},
            {"min_area", s.min_area},
            {"iou_min", s.eval.iou_min},
            {"size_bin_width", s.eval.size_bin_width}};
}

inline json to_json_value(const PipelineConfig& c) {
    json j = {{"schema_version", kSchemaVersion}, {"scene", to_json_value(c.scene)}};
    j.update(to_json_value(c.settings));
    j["output_dir"] = c.output_dir.generic_string();
    return j;
}

/// `base_dir` resolves a relative `scene_file` reference.
inline PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    detail::reject_unknown_keys(j, {"schema_version", "scene", "scene_file", "denoiser", "threshold",
                                    "min_area", "iou_min", "size_bin_width", "output_dir"},
                                "pipeline config");
    if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
        throw ConfigError("pipeline config: unsupported schema_version");
    PipelineConfig c;
    if (j.contains("scene") && j.contains("scene_file"))
        throw ConfigError("pipeline config: give either 'scene' or 'scene_file', not both");
    if (j.contains("scene")) {
        c.scene = scene_from_json(j.at("scene"));
    } else if (j.contains("scene_file")) {
        std::filesystem::path p = j.at("scene_file").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("pipeline config: cannot open scene file " + p.string());
        json scene;
        try {
            scene = json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("scene file " + p.string() + ": " + e.what());
        }
        c.scene = scene_from_json(scene);
    } else {
        c.scene.sampler = SamplerRequest{};
    }
    if (j.contains("denoiser")) c.settings.denoiser = denoiser_from_json(j.at("denoiser"));
    if (j.contains("threshold")) c.settings.threshold = threshold_from_json(j.at("threshold"));
    detail::read_if(j, "min_area", c.settings.min_area);
    detail::read_if(j, "iou_min", c.settings.eval.iou_min);
    detail::read_if(j, "size_bin_width", c.settings.eval.size_bin_width);
    if (!(c.settings.eval.size_bin_width > 0)) throw ConfigError("size_bin_width must be > 0");
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    return c;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return pipeline_config_from_json(read_json_file(path), path.parent_path());
}

// --- stages ----------------------------------------------------------------

struct DenoiseOutcome {
    Image image;
    json params;  // resolved parameters, for provenance
};

inline DenoiseOutcome run_denoiser(const Image& img, const DenoiserConfig& cfg) {
    if (const auto* g = std::get_if<GaussianParams>(&cfg)) return {gaussian_blur(img, *g), to_json_value(*g)};
    if (const auto* n = std::get_if<NlmParams>(&cfg)) {
        const ResolvedNlm r = resolve_nlm(img, *n);
        NlmParams fixed{r.patch_radius, r.search_radius, r.h, r.sigma};
        return {nlm_denoise(img, fixed), to_json_value(fixed)};
    }
    return {img, to_json_value(cfg)};
}

struct SegmentationOutcome {
    int level = 0;
    bool degenerate = false;  // Otsu found a single level; mask left empty
    LabelMap labels;
    std::vector<InstanceStats> instances;
};

inline SegmentationOutcome segment_image(const Image& img, const ThresholdConfig& threshold,
                                         std::uint64_t min_area) {
    SegmentationOutcome s;
    BinaryMask mask;
    if (const auto* f = std::get_if<FixedThreshold>(&threshold)) {
        s.level = f->level;
        mask = apply_threshold(img, f->level);
    } else {
        try {
            auto r = otsu_threshold(img);
            s.level = r.threshold;
            mask = std::move(r.mask);
        } catch (const DegenerateHistogramError&) {
            s.degenerate = true;
            s.level = 255;
            mask = BinaryMask(img.width(), img.height(), 0);
        }
    }
    s.labels = filter_min_area(connected_components(mask), min_area);
    s.instances = measure_instances(s.labels);
    return s;
}

struct PipelineResult {
    SceneRealization scene;
    std::optional<Image> denoised;
    json denoiser_params;
    SegmentationOutcome segmentation;
    EvaluationReport report;
};

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

/// Runs the whole workflow in memory.
inline PipelineResult process_scene(const SceneSpec& spec, const PipelineSettings& settings) {
    PipelineResult r;
    r.scene = run_stage("simulate", [&] { return simulate_scene(spec); });
    const Image* input = &r.scene.noisy;
    if (!std::holds_alternative<std::monostate>(settings.denoiser)) {
        auto d = run_stage("denoise", [&] { return run_denoiser(r.scene.noisy, settings.denoiser); });
        r.denoised = std::move(d.image);
        r.denoiser_params = std::move(d.params);
        input = &*r.denoised;
    } else {
        r.denoiser_params = to_json_value(settings.denoiser);
    }
    r.segmentation = run_stage("segment", [&] { return segment_image(*input, settings.threshold, settings.min_area); });
    r.report = run_stage("evaluate", [&] { return evaluate(r.scene.truth, r.segmentation.labels, settings.eval); });
    return r;
}

// --- artifacts -------------------------------------------------------------

inline json provenance(const SceneSpec& scene, const PipelineSettings& settings, const json& denoiser_params) {
    json settings_json = to_json_value(settings);
    settings_json["denoiser"] = denoiser_params;
    return {{"tool", kToolName}, {"version", kToolVersion}, {"seed", scene.seed},
            {"scene", to_json_value(scene)}, {"settings", settings_json}};
}

inline json report_json(const PipelineResult& r, const SceneSpec& scene, const PipelineSettings& settings) {
    json j = {{"schema_version", kSchemaVersion},
              {"provenance", provenance(scene, settings, r.denoiser_params)},
              {"noise", to_json_value(r.scene.noise)},
              {"threshold_level", r.segmentation.level},
              {"threshold_degenerate", r.segmentation.degenerate},
              {"min_area", settings.min_area},
              {"truth_instances", r.report.truth_sizes.n},
              {"predicted_instances", r.report.predicted_sizes.n}};
    j.update(to_json_value(r.report));
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Writes every artifact of a processed scene into `dir`.
inline void write_pipeline_outputs(const PipelineResult& r, const SceneSpec& scene,
                                   const PipelineSettings& settings, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const json prov = provenance(scene, settings, r.denoiser_params);
    const PngText text{{"nanoseg:provenance", prov.dump()}};

    json sidecar = {{"schema_version", kSchemaVersion}, {"provenance", prov}, {"scene", to_json_value(scene)}};
    json particles = json::array();
    for (const auto& p : r.scene.particles) particles.push_back(to_json_value(p));
    sidecar["realized_particles"] = particles;
    sidecar["noise"] = to_json_value(r.scene.noise);
    write_json(dir / "scene.json", sidecar);

    save_image(r.scene.clean, dir / "clean.png", 16, text);
    save_image(r.scene.noisy, dir / "noisy.png", 16, text);
    if (r.denoised) save_image(*r.denoised, dir / "denoised.png", 16, text);
    save_label_map(r.scene.truth, dir / "truth_labels.png", text);
    save_label_map(r.segmentation.labels, dir / "pred_labels.png", text);

    write_json(dir / "instances.json", {{"schema_version", kSchemaVersion},
                                        {"provenance", prov},
                                        {"instances", instance_table_json(r.segmentation.instances)}});
    write_json(dir / "report.json", report_json(r, scene, settings));
    write_text(dir / "size_histogram.csv", size_histogram_csv(r.report.predicted_sizes, r.report.truth_sizes));
    write_text(dir / "size_distribution.svg", size_distribution_svg(r.report.predicted_sizes, r.report.truth_sizes));
}

/// Processes the configured scene and writes all artifacts to cfg.output_dir.
inline EvaluationReport run_pipeline(const PipelineConfig& cfg) {
    PipelineResult r = process_scene(cfg.scene, cfg.settings);
    run_stage("write", [&] {
        write_pipeline_outputs(r, cfg.scene, cfg.settings, cfg.output_dir);
        return 0;
    });
    return r.report;
}

// --- sweeps ----------------------------------------------------------------

struct SweepItem {
    double value = 0.0;  // the swept parameter (SNR, diameter, ...)
    std::string name;
    SceneSpec scene;
};

struct SweepPoint {
    SweepItem item;
    PipelineResult result;
};

/// Runs each scene through the pipeline, up to `jobs` at a time; results keep input order.
inline std::vector<SweepPoint> run_sweep(const std::vector<SweepItem>& items,
                                         const PipelineSettings& settings, unsigned jobs = 1) {
    std::vector<SweepPoint> out(items.size());
    jobs = std::max(1u, jobs);
    for (std::size_t start = 0; start < items.size(); start += jobs) {
        std::vector<std::future<PipelineResult>> running;
        const std::size_t stop = std::min(items.size(), start + jobs);
        for (std::size_t i = start; i < stop; ++i)
            running.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                         [&, i] { return process_scene(items[i].scene, settings); }));
        for (std::size_t i = start; i < stop; ++i) out[i] = {items[i], running[i - start].get()};
    }
    return out;
}

/// Same particle layout at every SNR; infinity means no Gaussian noise.
inline std::vector<SweepPoint> snr_sweep(const SceneSpec& base, const std::vector<double>& snrs,
                                         const PipelineSettings& settings, unsigned jobs = 1) {
    if (snrs.empty()) throw std::invalid_argument("snr_sweep: empty SNR list");
    SceneSpec fixed = base;
    fixed.particles = run_stage("simulate", [&] { return sample_scene(base); });
    fixed.sampler.reset();
    std::vector<SweepItem> items;
    for (double snr : snrs) {
        SceneSpec s = fixed;
        if (std::isinf(snr)) s.target_snr.reset();
        else s.target_snr = snr;
        items.push_back({snr, std::isinf(snr) ? "no-noise" : json(snr).dump(), std::move(s)});
    }
    return run_sweep(items, settings, jobs);
}

/// Sampler size sweep (sphere diameter, rod length or cube edge).
inline std::vector<SweepPoint> size_sweep(const SceneSpec& base, const std::vector<double>& sizes,
                                          const PipelineSettings& settings, unsigned jobs = 1) {
    std::vector<SweepItem> items;
    for (double d : sizes) {
        SceneSpec s = base;
        s.particles.clear();
        SamplerRequest req = base.sampler.value_or(SamplerRequest{});
        req.size_mean = d;
        s.sampler = req;
        items.push_back({d, json(d).dump(), std::move(s)});
    }
    return run_sweep(items, settings, jobs);
}

/// One scene per shape family; `sizes[i]` is the sampler size for families[i].
inline std::vector<SweepPoint> shape_sweep(const SceneSpec& base, const std::vector<ShapeFamily>& families,
                                           const std::vector<double>& sizes,
                                           const PipelineSettings& settings, unsigned jobs = 1) {
    if (sizes.size() != families.size()) throw std::invalid_argument("shape_sweep: one size per family");
    std::vector<SweepItem> items;
    for (std::size_t i = 0; i < families.size(); ++i) {
        SceneSpec s = base;
        s.particles.clear();
        SamplerRequest req = base.sampler.value_or(SamplerRequest{});
        req.family = families[i];
        req.size_mean = sizes[i];
        s.sampler = req;
        items.push_back({static_cast<double>(i), family_name(families[i]), std::move(s)});
    }
    return run_sweep(items, settings, jobs);
}

inline json sweep_json(const std::vector<SweepPoint>& points, const std::string& parameter,
                       const PipelineSettings& settings) {
    json rows = json::array();
    for (const auto& p : points) {
        json row = report_json(p.result, p.item.scene, settings);
        row["sweep_value"] = detail::finite_or_null(p.item.value);
        row["sweep_name"] = p.item.name;
        rows.push_back(std::move(row));
    }
    return {{"schema_version", kSchemaVersion}, {"parameter", parameter}, {"points", rows}};
}

}  // namespace nanoseg

#endif  // NANOSEG_PIPELINE_HPP
