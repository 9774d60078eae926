#pragma once

#include <string>
#include <vector>

#include "realdiff/denoiser.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/rng.hpp"
#include "realdiff/schedule.hpp"

namespace realdiff {

struct LossWeights {
    double lambda1 = 1.0;  // diffusion BCE
    double lambda2 = 0.5;  // silhouette
    double lambda3 = 0.5;  // depth

    void validate() const;
};

// x_t plus the conditioning info; the sampler keeps condition-region values
// clean at every step.
struct DiffusionState {
    OccupancyGrid x_t;
    ConditionMask mask;
    int t = 0;
};

enum class SamplerMode {
    PaperEq6,       // the update as printed: 1/sqrt(a)*(x - (1-a)/sqrt(1-abar)*(x - x0)) + sqrt(b)*z
    DdpmPosterior,  // x0-parameterized posterior mean with variance beta_tilde
};

SamplerMode sampler_mode_from_string(const std::string& s);
std::string to_string(SamplerMode mode);

// Closed-form forward noising on the free region; condition voxels are
// copied through untouched. noise must span the whole grid (masked entries
// ignored).
OccupancyGrid q_sample(const OccupancyGrid& x0, const ConditionMask& mask, int t,
                       const std::vector<double>& noise, const VarianceSchedule& sched);

struct BceResult {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d pred, full grid, zero outside support
};

// Mean binary cross entropy; phase 1 restricts the support to the free
// region, phase 2 covers every voxel. Predictions are clamped to
// [1e-7, 1-1e-7]; the gradient is the true derivative of the clamped
// composition (zero where the clamp is active).
BceResult masked_bce_loss(const OccupancyGrid& pred, const OccupancyGrid& gt,
                          const ConditionMask& mask, int phase);

// One reverse transition x_t -> x_{t-1} followed by condition-region
// replacement. z spans the whole grid; callers pass z = 0 at t = 1.
OccupancyGrid reverse_step(const DiffusionState& state, const OccupancyGrid& x0_pred,
                           const VarianceSchedule& sched, const std::vector<double>& z,
                           SamplerMode mode);

// Full conditional rollout: free region starts at N(0,1), condition region
// stays clean, T steps down to 1, output binarized at 0.5.
OccupancyGrid generate(const Denoiser& denoiser, const OccupancyGrid& c0,
                       const ConditionMask& mask, const VarianceSchedule& sched, Rng& rng,
                       SamplerMode mode);

}  // namespace realdiff
