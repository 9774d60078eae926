#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "realdiff/diffusion.hpp"
#include "realdiff/render.hpp"
#include "realdiff/synth.hpp"
#include "realdiff/tiny_denoiser.hpp"

namespace realdiff {

// One training viewpoint: the camera carries the measured silhouette and the
// smooth surrogate depth the rendering losses compare against; grid is the
// binary voxelization of this view's cloud.
struct TrainView {
    CameraView cam;
    OccupancyGrid grid;
};

struct TrainObject {
    std::string id;
    std::vector<TrainView> views;
};

// Swaps each view's raw depth for an affinely distorted box-blurred copy
// (per-view (a,b) drawn from rng), mimicking scale/shift-ambiguous monocular
// depth. Silhouettes pass through unchanged.
TrainObject make_train_object(const ObjectRecord& rec, int blur_radius, Rng& rng);

struct TrainConfig {
    int phase1_epochs = 0;
    int phase2_epochs = 0;
    int batch = 4;
    double lr = 1e-3;
    uint64_t seed = 0;
    LossWeights weights;
    int T = 50;
    double beta0 = 1e-4, betaT = 2e-2;
    int embed_dim = 8;
    int hidden = 8;
    int render_samples = 32;
    RenderMode render_mode = RenderMode::Compositing;
    double w_min = 0.5;
    double second_view_ratio = 0.3;
    std::string checkpoint_base;  // empty: no checkpoint written

    void validate() const;
};

struct TrainResult {
    TinyDenoiserParams params;
    std::vector<double> loss_curve;  // one mean loss per completed epoch
    bool aborted = false;            // diverged; params hold the last good state
    int completed_epochs = 0;
};

// Two-phase training. Each epoch draws a fresh (input view, eligible second
// view) pair per object; phase 1 minimizes the masked diffusion BCE, phase 2
// lifts the mask and adds the weighted silhouette and depth rendering losses
// on the two views. Non-finite loss or gradients abort with the parameters
// of the last finished epoch (checkpoint written either way when a base path
// is configured).
TrainResult train(const std::vector<TrainObject>& dataset, const TrainConfig& cfg);

// One forward/backward of the phase-1 objective on a prepared composite
// grid; exposed so tests can probe the gradient path with a controlled
// (input, target) split.
struct StepGrad {
    double loss = 0.0;
    std::vector<double> param_grad;
};
StepGrad phase1_gradient(const TinyDenoiserParams& params, const OccupancyGrid& x0,
                         const OccupancyGrid& target, const ConditionMask& mask, int t,
                         const std::vector<double>& noise, const VarianceSchedule& sched);

}  // namespace realdiff
