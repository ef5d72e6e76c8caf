#include <nanoseg/nanoseg.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace nanoseg;

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kStageError = 3, kValidationFailure = 4 };

class ValidationFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "inf" / "none" / "null" map to null, anything else must parse as a number.
json number_or_null(const std::string& text, const char* flag) {
    if (text == "inf" || text == "none" || text == "null") return nullptr;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(flag) + ": expected a number or 'inf', got '" + text + "'");
    }
}

struct SceneFlags {
    std::optional<int> width, height, count;
    std::optional<double> pixel_size, size_mean, size_std, rod_width, concavity;
    std::optional<double> dose_rate, exposure, sin_thickness, liquid_thickness, texture_amplitude;
    std::optional<std::string> shape, saturation_thickness, snr;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App* app) {
        app->add_option("--seed", seed, "Seed for every random stream");
        app->add_option("--width", width, "Image width (px)");
        app->add_option("--height", height, "Image height (px)");
        app->add_option("--pixel-size", pixel_size, "Pixel size (nm)");
        app->add_option("--count", count, "Number of sampled particles");
        app->add_option("--shape", shape, "Sampled shape: sphere, rod, concave_cube");
        app->add_option("--size-mean", size_mean, "Sphere diameter, rod length or cube edge (px)");
        app->add_option("--size-std", size_std, "Size standard deviation (px)");
        app->add_option("--rod-width", rod_width, "Rod width (px)");
        app->add_option("--concavity", concavity, "Cube face concavity, fraction of the edge");
        app->add_option("--dose-rate", dose_rate, "Electron dose rate (e/A^2/s)");
        app->add_option("--exposure", exposure, "Exposure time (s)");
        app->add_option("--sin-thickness", sin_thickness, "Thickness of each SiN window (nm)");
        app->add_option("--liquid-thickness", liquid_thickness, "Liquid layer thickness (nm)");
        app->add_option("--texture-amplitude", texture_amplitude, "Background texture amplitude");
        app->add_option("--saturation-thickness", saturation_thickness,
                        "Contrast saturation scale (nm), or 'none' for linear contrast");
        app->add_option("--snr", snr, "Target SNR of the added Gaussian noise, or 'inf' for none");
    }

    bool touches_sampler() const {
        return count || shape || size_mean || size_std || rod_width || concavity;
    }

    void apply(json& scene) const {
        auto set = [&](const char* key, const auto& v) {
            if (v) scene[key] = *v;
        };
        set("seed", seed);
        set("width", width);
        set("height", height);
        set("pixel_size", pixel_size);
        set("dose_rate", dose_rate);
        set("exposure", exposure);
        set("sin_thickness", sin_thickness);
        set("liquid_thickness", liquid_thickness);
        set("background_texture_amplitude", texture_amplitude);
        if (saturation_thickness)
            scene["saturation_thickness"] = number_or_null(*saturation_thickness, "--saturation-thickness");
        if (snr) scene["target_snr"] = number_or_null(*snr, "--snr");
        if (touches_sampler()) {
            if (!scene["particles"].empty())
                throw ConfigError("sampler flags conflict with the explicit particle list in the scene");
            json& s = scene["sampler"];
            if (s.is_null()) s = to_json_value(SamplerRequest{});
            set_into(s, "count", count);
            set_into(s, "shape", shape);
            set_into(s, "size_mean", size_mean);
            set_into(s, "size_std", size_std);
            set_into(s, "rod_width", rod_width);
            set_into(s, "concavity", concavity);
        }
    }

private:
    template <typename T>
    static void set_into(json& j, const char* key, const std::optional<T>& v) {
        if (v) j[key] = *v;
    }
};

struct DenoiserFlags {
    std::optional<std::string> method;
    std::optional<double> sigma, h, noise_sigma;
    std::optional<int> kernel_width, kernel_height, patch_radius, search_radius;

    void add_to(CLI::App* app, bool with_none = true) {
        app->add_option("--denoiser", method, with_none ? "none, gaussian or nlm" : "gaussian or nlm");
        app->add_option("--sigma", sigma, "Gaussian kernel sigma (px)");
        app->add_option("--kernel-width", kernel_width, "Gaussian kernel width (odd)");
        app->add_option("--kernel-height", kernel_height, "Gaussian kernel height (odd)");
        app->add_option("--patch-radius", patch_radius, "NLM patch radius");
        app->add_option("--search-radius", search_radius, "NLM search radius");
        app->add_option("--nlm-h", h, "NLM filtering strength (default 0.8 x estimated noise sigma)");
        app->add_option("--noise-sigma", noise_sigma, "NLM noise sigma (default: estimated)");
    }

    void apply(json& denoiser) const {
        if (method) denoiser = {{"type", *method}};
        const std::string type = denoiser.value("type", "none");
        const bool gaussian_flags = sigma || kernel_width || kernel_height;
        const bool nlm_flags = patch_radius || search_radius || h || noise_sigma;
        if (gaussian_flags && type != "gaussian")
            throw ConfigError("--sigma/--kernel-* apply only to --denoiser gaussian");
        if (nlm_flags && type != "nlm")
            throw ConfigError("--patch-radius/--search-radius/--nlm-h/--noise-sigma apply only to --denoiser nlm");
        if (sigma) denoiser["sigma"] = *sigma;
        if (kernel_width) denoiser["kernel_width"] = *kernel_width;
        if (kernel_height) denoiser["kernel_height"] = *kernel_height;
        if (patch_radius) denoiser["patch_radius"] = *patch_radius;
        if (search_radius) denoiser["search_radius"] = *search_radius;
        if (h) denoiser["h"] = *h;
        if (noise_sigma) denoiser["sigma"] = *noise_sigma;
    }
};

struct SettingsFlags {
    std::optional<std::string> threshold;
    std::optional<std::uint64_t> min_area;
    std::optional<double> iou_min, size_bin_width;

    void add_to(CLI::App* app) {
        app->add_option("--threshold", threshold, "'otsu' or a fixed level in [0, 255]");
        app->add_option("--min-area", min_area, "Discard instances smaller than this (px^2)");
        app->add_option("--iou-min", iou_min, "IoU needed for a detection to count as matched");
        app->add_option("--size-bin-width", size_bin_width, "Bin width of the area histogram (px^2)");
    }

    void apply(json& cfg) const {
        if (threshold) {
            if (*threshold == "otsu") {
                cfg["threshold"] = {{"type", "otsu"}};
            } else {
                const json level = number_or_null(*threshold, "--threshold");
                if (level.is_null() || std::floor(level.get<double>()) != level.get<double>())
                    throw ConfigError("--threshold: expected 'otsu' or an integer level");
                cfg["threshold"] = {{"type", "fixed"}, {"level", static_cast<int>(level.get<double>())}};
            }
        }
        if (min_area) cfg["min_area"] = *min_area;
        if (iou_min) cfg["iou_min"] = *iou_min;
        if (size_bin_width) cfg["size_bin_width"] = *size_bin_width;
    }
};

/// Config file (if any) with every flag override applied on top.
struct RunFlags {
    std::string config;
    std::optional<std::string> out;
    SceneFlags scene;
    DenoiserFlags denoiser;
    SettingsFlags settings;

    void add_to(CLI::App* app) {
        app->add_option("-c,--config", config, "Pipeline config JSON");
        app->add_option("-o,--out", out, "Output directory");
        scene.add_to(app);
        denoiser.add_to(app);
        settings.add_to(app);
    }

    PipelineConfig resolve() const {
        PipelineConfig base;
        base.scene.sampler = SamplerRequest{};
        if (!config.empty()) base = load_pipeline_config(config);
        json j = to_json_value(base);
        scene.apply(j["scene"]);
        denoiser.apply(j["denoiser"]);
        settings.apply(j);
        if (out) j["output_dir"] = *out;
        return pipeline_config_from_json(j);
    }
};

/// A scene file may be a bare scene or a whole pipeline config.
SceneSpec load_scene_file(const fs::path& path) {
    const json j = read_json_file(path);
    if (j.is_object() && (j.contains("scene") || j.contains("scene_file") || j.contains("denoiser")))
        return pipeline_config_from_json(j, path.parent_path()).scene;
    return scene_from_json(j);
}

Image load_input(const fs::path& path) {
    return run_stage("load", [&] { return load_image(path); });
}

void print_summary(const EvaluationReport& r) {
    std::cout << "tp=" << r.detection.tp << " fp=" << r.detection.fp << " fn=" << r.detection.fn
              << " precision=" << r.detection.precision << " recall=" << r.detection.recall
              << " pixel_accuracy=" << r.pixel_accuracy << " mean_iou=" << r.mean_iou << "\n";
}

// --- sub-commands ------------------------------------------------------------

int cmd_simulate(const std::string& config, const SceneFlags& flags, const fs::path& out) {
    SceneSpec spec;
    spec.sampler = SamplerRequest{};
    if (!config.empty()) spec = load_scene_file(config);
    json j = to_json_value(spec);
    flags.apply(j);
    spec = scene_from_json(j);

    const SceneRealization s = run_stage("simulate", [&] { return simulate_scene(spec); });
    run_stage("write", [&] {
        fs::create_directories(out);
        const json prov = {{"tool", kToolName}, {"version", kToolVersion}, {"seed", spec.seed},
                           {"scene", to_json_value(spec)}};
        const PngText text{{"nanoseg:provenance", prov.dump()}};
        json particles = json::array();
        for (const auto& p : s.particles) particles.push_back(to_json_value(p));
        write_json(out / "scene.json", {{"schema_version", kSchemaVersion},
                                        {"provenance", prov},
                                        {"scene", to_json_value(spec)},
                                        {"realized_particles", particles},
                                        {"noise", to_json_value(s.noise)}});
        save_image(s.clean, out / "clean.png", 16, text);
        save_image(s.noisy, out / "noisy.png", 16, text);
        save_label_map(s.truth, out / "truth_labels.png", text);
        return 0;
    });
    std::cout << "simulated " << s.particles.size() << " particles into " << out.string() << "\n";
    return kOk;
}

int cmd_denoise(const fs::path& in, const fs::path& out, const DenoiserFlags& flags, unsigned threads) {
    json cfg = {{"type", "gaussian"}};
    flags.apply(cfg);
    const DenoiserConfig d = denoiser_from_json(cfg);
    if (std::holds_alternative<std::monostate>(d)) throw ConfigError("denoise: choose gaussian or nlm");
    const Image img = load_input(in);
    const DenoiseOutcome r = run_stage("denoise", [&] {
        if (const auto* n = std::get_if<NlmParams>(&d)) {
            const ResolvedNlm p = resolve_nlm(img, *n);
            NlmParams fixed{p.patch_radius, p.search_radius, p.h, p.sigma};
            return DenoiseOutcome{nlm_denoise(img, fixed, threads), to_json_value(fixed)};
        }
        return run_denoiser(img, d);
    });
    const json prov = {{"tool", kToolName}, {"version", kToolVersion}, {"input", in.generic_string()},
                       {"denoiser", r.params}};
    run_stage("write", [&] {
        save_image(r.image, out, 16, {{"nanoseg:provenance", prov.dump()}});
        return 0;
    });
    std::cout << r.params.dump() << "\n";
    return kOk;
}

int cmd_segment(const fs::path& in, const fs::path& out, const SettingsFlags& flags,
                const std::optional<fs::path>& instances) {
    json cfg = {{"threshold", {{"type", "otsu"}}}, {"min_area", kDefaultMinArea}};
    flags.apply(cfg);
    const ThresholdConfig threshold = threshold_from_json(cfg.at("threshold"));
    const auto min_area = cfg.at("min_area").get<std::uint64_t>();
    const Image img = load_input(in);
    const SegmentationOutcome s = run_stage("segment", [&] { return segment_image(img, threshold, min_area); });
    const json prov = {{"tool", kToolName}, {"version", kToolVersion}, {"input", in.generic_string()},
                       {"threshold", to_json_value(threshold)}, {"threshold_level", s.level},
                       {"min_area", min_area}};
    run_stage("write", [&] {
        save_label_map(s.labels, out, {{"nanoseg:provenance", prov.dump()}});
        if (instances)
            write_json(*instances, {{"schema_version", kSchemaVersion},
                                    {"provenance", prov},
                                    {"instances", instance_table_json(s.instances)}});
        return 0;
    });
    std::cout << "threshold level " << s.level << (s.degenerate ? " (degenerate histogram)" : "") << ", "
              << s.instances.size() << " instances\n";
    return kOk;
}

LabelMap load_checked_labels(const fs::path& path, const char* role) {
    LabelMap m;
    try {
        m = load_label_map(path);
    } catch (const ImageIoError& e) {
        throw ValidationFailure(std::string(role) + ": " + e.what());
    }
    if (!is_compact(m))
        throw ValidationFailure(std::string(role) + " labels are not 1..K without gaps (" + path.string() +
                                "); run validate-masks --out to compact them");
    return m;
}

int cmd_evaluate(const fs::path& truth_path, const fs::path& pred_path, const fs::path& out,
                 const SettingsFlags& flags) {
    json cfg = {{"iou_min", kDefaultIouMin}, {"size_bin_width", kDefaultSizeBinWidth}};
    flags.apply(cfg);
    EvalConfig ec{cfg.at("iou_min").get<double>(), cfg.at("size_bin_width").get<double>()};
    if (!(ec.size_bin_width > 0)) throw ConfigError("--size-bin-width must be > 0");
    const LabelMap truth = load_checked_labels(truth_path, "truth");
    const LabelMap pred = load_checked_labels(pred_path, "prediction");
    if (!truth.same_shape(pred)) throw ValidationFailure("truth and prediction sizes differ");

    const EvaluationReport r = run_stage("evaluate", [&] { return evaluate(truth, pred, ec); });
    run_stage("write", [&] {
        json j = {{"schema_version", kSchemaVersion},
                  {"provenance",
                   {{"tool", kToolName}, {"version", kToolVersion}, {"truth", truth_path.generic_string()},
                    {"prediction", pred_path.generic_string()}}}};
        j.update(to_json_value(r));
        const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
        fs::create_directories(dir);
        write_json(out, j);
        write_text(dir / "size_histogram.csv", size_histogram_csv(r.predicted_sizes, r.truth_sizes));
        write_text(dir / "size_distribution.svg", size_distribution_svg(r.predicted_sizes, r.truth_sizes));
        return 0;
    });
    print_summary(r);
    return kOk;
}

int cmd_pipeline(const RunFlags& flags) {
    const PipelineConfig cfg = flags.resolve();
    const EvaluationReport r = run_pipeline(cfg);
    print_summary(r);
    std::cout << "outputs in " << cfg.output_dir.string() << "\n";
    return kOk;
}

int cmd_sweep(const RunFlags& flags, const std::string& vary, const std::vector<std::string>& values,
              unsigned jobs) {
    const PipelineConfig cfg = flags.resolve();
    std::vector<SweepPoint> points;
    if (vary == "snr") {
        std::vector<double> snrs;
        for (const auto& v : values.empty() ? std::vector<std::string>{"inf", "14.5497", "7.4870"} : values) {
            const json x = number_or_null(v, "--values");
            snrs.push_back(x.is_null() ? std::numeric_limits<double>::infinity() : x.get<double>());
        }
        points = snr_sweep(cfg.scene, snrs, cfg.settings, jobs);
    } else if (vary == "diameter") {
        std::vector<double> sizes;
        for (const auto& v : values.empty() ? std::vector<std::string>{"30", "50", "70"} : values) {
            const json x = number_or_null(v, "--values");
            if (x.is_null()) throw ConfigError("--values: diameters must be finite");
            sizes.push_back(x.get<double>());
        }
        points = size_sweep(cfg.scene, sizes, cfg.settings, jobs);
    } else if (vary == "shape") {
        // Default sizes: sphere diameter 120, cube edge 50, rod length 65.
        std::vector<ShapeFamily> families;
        std::vector<double> sizes;
        for (const auto& v : values.empty() ? std::vector<std::string>{"sphere=120", "concave_cube=50", "rod=65"}
                                            : values) {
            const auto eq = v.find('=');
            const ShapeFamily f = family_from_name(v.substr(0, eq));
            families.push_back(f);
            if (eq == std::string::npos) {
                sizes.push_back(f == ShapeFamily::sphere ? 120.0 : f == ShapeFamily::rod ? 65.0 : 50.0);
            } else {
                const json x = number_or_null(v.substr(eq + 1), "--values");
                if (x.is_null()) throw ConfigError("--values: sizes must be finite");
                sizes.push_back(x.get<double>());
            }
        }
        points = shape_sweep(cfg.scene, families, sizes, cfg.settings, jobs);
    } else {
        throw ConfigError("--vary must be snr, diameter or shape");
    }

    run_stage("write", [&] {
        fs::create_directories(cfg.output_dir);
        std::string csv = "value,name,pixel_accuracy,precision,recall,mean_iou,mean_pred_area,mean_truth_area\n";
        std::vector<std::pair<double, double>> curve;
        for (const auto& p : points) {
            write_pipeline_outputs(p.result, p.item.scene, cfg.settings, cfg.output_dir / p.item.name);
            const auto& r = p.result.report;
            csv += detail::finite_or_null(p.item.value).dump() + ',' + p.item.name + ',' +
                   json(r.pixel_accuracy).dump() + ',' + json(r.detection.precision).dump() + ',' +
                   json(r.detection.recall).dump() + ',' + json(r.mean_iou).dump() + ',' +
                   json(r.predicted_sizes.mean_area).dump() + ',' + json(r.truth_sizes.mean_area).dump() + '\n';
            if (std::isfinite(p.item.value)) curve.emplace_back(p.item.value, r.pixel_accuracy);
        }
        write_json(cfg.output_dir / "sweep.json", sweep_json(points, vary, cfg.settings));
        write_text(cfg.output_dir / "sweep.csv", csv);
        if (vary == "snr") {
            std::sort(curve.begin(), curve.end());
            write_text(cfg.output_dir / "accuracy_vs_snr.svg",
                       line_chart_svg(curve, "Pixel accuracy vs. SNR", "SNR", "pixel accuracy"));
        }
        return 0;
    });
    for (const auto& p : points) {
        std::cout << "[" << vary << " " << p.item.name << "] ";
        print_summary(p.result.report);
    }
    return kOk;
}

int cmd_hist(const fs::path& in, const std::optional<fs::path>& out) {
    const Image img = load_input(in);
    const IntensityHistogram h = compute_histogram(img);
    const std::string csv = histogram_csv(h);
    if (out)
        run_stage("write", [&] {
            write_text(*out, csv);
            return 0;
        });
    else
        std::cout << csv;
    std::cerr << "pixels=" << h.total << " modal_bin=" << h.modal_bin() << "\n";
    return kOk;
}

int cmd_validate_masks(const fs::path& in, const std::optional<fs::path>& out) {
    LabelMap m;
    try {
        m = load_label_map(in);
    } catch (const ImageIoError& e) {
        std::cerr << "invalid label map: " << e.what() << "\n";
        return kValidationFailure;
    }
    if (is_compact(m)) {
        std::cout << in.string() << ": ok, " << max_label(m) << " instances\n";
        if (out) run_stage("write", [&] {
                save_label_map(m, *out);
                return 0;
            });
        return kOk;
    }
    if (!out) {
        std::cerr << in.string() << ": labels are not 1..K without gaps (max label " << max_label(m)
                  << "); pass --out to write a compacted copy\n";
        return kValidationFailure;
    }
    const LabelMap c = compact_labels(m);
    run_stage("write", [&] {
        save_label_map(c, *out);
        return 0;
    });
    std::cout << in.string() << ": compacted to " << max_label(c) << " instances in " << out->string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate, denoise, segment and evaluate nanoparticle STEM-HAADF images"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string scene_config;
    std::string out_dir = "out";
    SceneFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "Render a scene and write clean/noisy images and truth labels");
    simulate->add_option("-c,--config", scene_config, "Scene JSON (or a pipeline config)");
    simulate->add_option("-o,--out", out_dir, "Output directory");
    sim_flags.add_to(simulate);

    std::string in_path, out_path;
    unsigned threads = 0;
    DenoiserFlags den_flags;
    auto* denoise = app.add_subcommand("denoise", "Apply a Gaussian or NLM filter to an image");
    denoise->add_option("-i,--in", in_path, "Input image (PNG or PGM)")->required();
    denoise->add_option("-o,--out", out_path, "Output image")->required();
    denoise->add_option("--threads", threads, "Worker threads for NLM (0 = hardware)");
    den_flags.add_to(denoise, false);

    SettingsFlags seg_flags;
    std::optional<std::string> instances_path;
    auto* segment = app.add_subcommand("segment", "Threshold, label and area-filter an image");
    segment->add_option("-i,--in", in_path, "Input image")->required();
    segment->add_option("-o,--out", out_path, "Output 16-bit label PNG")->required();
    segment->add_option("--instances", instances_path, "Write the instance table JSON here");
    seg_flags.add_to(segment);

    std::string truth_path, pred_path;
    std::string report_path = "report.json";
    SettingsFlags eval_flags;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predicted label map against ground truth");
    evaluate_cmd->add_option("--truth", truth_path, "Ground-truth label PNG")->required();
    evaluate_cmd->add_option("--pred", pred_path, "Predicted label PNG")->required();
    evaluate_cmd->add_option("-o,--out", report_path, "Report JSON path");
    evaluate_cmd->add_option("--iou-min", eval_flags.iou_min, "IoU needed for a match");
    evaluate_cmd->add_option("--size-bin-width", eval_flags.size_bin_width, "Area histogram bin width");

    RunFlags pipe_flags;
    auto* pipeline = app.add_subcommand("pipeline", "Simulate, denoise, segment and evaluate in one run");
    pipe_flags.add_to(pipeline);

    RunFlags sweep_flags;
    std::string vary = "snr";
    std::vector<std::string> values;
    unsigned jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Repeat the pipeline over SNR, diameter or shape");
    sweep_flags.add_to(sweep);
    sweep->add_option("--vary", vary, "snr, diameter or shape")->check(CLI::IsMember({"snr", "diameter", "shape"}));
    sweep->add_option("--values", values, "Comma-separated values (shape entries as name or name=size)")
        ->delimiter(',');
    sweep->add_option("-j,--jobs", jobs, "Runs in parallel");

    std::optional<std::string> hist_out;
    auto* hist = app.add_subcommand("hist", "256-bin intensity histogram as CSV");
    hist->add_option("-i,--in", in_path, "Input image")->required();
    hist->add_option("-o,--out", hist_out, "CSV path (default: stdout)");

    std::optional<std::string> compact_out;
    auto* validate = app.add_subcommand("validate-masks", "Check that a label PNG uses labels 1..K; optionally compact it");
    validate->add_option("-i,--in", in_path, "Label PNG")->required();
    validate->add_option("-o,--out", compact_out, "Write a compacted copy here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(scene_config, sim_flags, out_dir);
        if (denoise->parsed()) return cmd_denoise(in_path, out_path, den_flags, threads);
        if (segment->parsed()) {
            std::optional<fs::path> inst;
            if (instances_path) inst = *instances_path;
            return cmd_segment(in_path, out_path, seg_flags, inst);
        }
        if (evaluate_cmd->parsed()) return cmd_evaluate(truth_path, pred_path, report_path, eval_flags);
        if (pipeline->parsed()) return cmd_pipeline(pipe_flags);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, vary, values, jobs);
        if (hist->parsed()) {
            std::optional<fs::path> o;
            if (hist_out) o = *hist_out;
            return cmd_hist(in_path, o);
        }
        if (validate->parsed()) {
            std::optional<fs::path> o;
            if (compact_out) o = *compact_out;
            return cmd_validate_masks(in_path, o);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ValidationFailure& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kValidationFailure;
    } catch (const StageError& e) {
        std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
        return kStageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kStageError;
    }
    return kConfigError;
}
