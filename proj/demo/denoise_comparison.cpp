// Compares raw, Gaussian and NLM pipelines on one noisy scene.
#include <nanoseg/nanoseg.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    using namespace nanoseg;
    SceneSpec scene;
    scene.sampler = SamplerRequest{};
    scene.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 42;
    scene.target_snr = 7.4870;

    const DenoiserConfig filters[] = {std::monostate{}, GaussianParams{}, NlmParams{}};
    const char* names[] = {"none", "gaussian", "nlm"};
    for (int i = 0; i < 3; ++i) {
        PipelineSettings settings;
        settings.denoiser = filters[i];
        const PipelineResult r = process_scene(scene, settings);
        std::cout << names[i] << ": threshold " << r.segmentation.level << ", pixel accuracy "
                  << r.report.pixel_accuracy << ", recall " << r.report.detection.recall << ", mean IoU "
                  << r.report.mean_iou << "\n";
    }
}
