#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "realdiff/diffusion.hpp"
#include "realdiff/render.hpp"
#include "realdiff/synth.hpp"
#include "realdiff/train.hpp"

namespace realdiff {

// Flat run configuration shared by every subcommand. The zero-argument
// instance is the full desk-scale default; each field mirrors the default
// documented with the module that owns it. Parsing is strict: a key that is
// not listed here is an error, never ignored.
struct RunConfig {
    // dataset
    std::string data_dir = "data";
    int n_objects = 8;
    int views_per_object = 8;
    int image_size = 64;
    int grid_n = 16;
    double voxel_size = 1.0 / 16.0;
    double noise_sigma = -1.0;  // < 0 selects 0.5 * voxel_size
    double dropout_p = 0.1;
    int points_per_cloud = 2048;
    double second_view_ratio = 0.3;
    std::vector<std::string> categories;  // empty = all three, cycled

    // schedule + sampler
    int T = 50;
    double beta0 = 1e-4;
    double betaT = 2e-2;
    std::string sampler_mode = "ddpm-posterior";

    // renderer
    std::string render_mode = "compositing";
    int render_samples = 64;
    double w_min = 0.5;

    // training
    int phase1_epochs = 0;
    int phase2_epochs = 0;
    int batch = 4;
    double lr = 1e-3;
    std::vector<double> lambda{1.0, 0.5, 0.5};
    int embed_dim = 8;
    int hidden = 8;
    int mono_blur = 1;  // blur radius of the mono-depth stand-in

    // meshing + metrics
    double iso = 0.5;
    double tau = 1e-2;
    int eval_samples = 16384;
    int eval_completions = 4;  // completions drawn per object by `eval`
    int emd_max_exact = 512;

    uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;

    // Throws with a diagnostic naming the offending key.
    void validate() const;
};

// Strict JSON -> config: unknown key, wrong type, or invariant violation
// throws with the key named; absent keys keep their defaults, so "{}" is
// the default config.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical JSON (every key, sorted); parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& cfg);

// Master-seed fan-out: every stage draws from its own named stream
// ("data" | "train" | "sample" | "render" | "eval"), so stages are
// independently reproducible.
uint64_t stage_seed(uint64_t master_seed, std::string_view stage);

// Views of the config as the per-module option structs / enums.
DatasetParams dataset_params(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg);
SamplerMode config_sampler_mode(const RunConfig& cfg);
RenderMode config_render_mode(const RunConfig& cfg);

}  // namespace realdiff
