#pragma once

#include <cstdint>
#include <vector>

#include "realdiff/camera.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/image.hpp"

namespace realdiff {

enum class RenderMode {
    Paper,        // T_i = exp(-sum_{j<i} o_j * delta_j); silhouette not bounded by 1
    Compositing,  // T_i = prod_{j<i} (1 - o_j); silhouette in [0,1]
};

// Uniform midpoint quadrature along one ray between near and far.
struct RaySamples {
    Vec3 origin, dir;
    std::vector<double> t_vals;  // strictly increasing midpoints
    std::vector<double> deltas;  // constant spacing (far-near)/M
};

RaySamples make_ray_samples(const Ray& ray, double near, double far, int M);

// 8-corner blend over the voxel-center lattice; zero outside its hull.
double trilinear(const OccupancyGrid& grid, const Vec3& p);

// corner indices/weights actually inside the grid (for gradient scatter)
struct TrilinearTaps {
    int n = 0;
    size_t idx[8];
    double w[8];
};
TrilinearTaps trilinear_taps(const GridSpec& spec, const Vec3& p);

struct RenderedView {
    Image silhouette;  // sum T_i o_i
    Image depth;       // sum T_i o_i t_i
    Image weight;      // equals silhouette; kept for depth-loss masking
};

// Marches every pixel of cam through the grid: M samples between the
// ray/grid-AABB near and far. Rays that miss the box produce 0/0/0.
RenderedView render_view(const OccupancyGrid& grid, const CameraView& cam, int M,
                         RenderMode mode);
Image render_silhouette(const OccupancyGrid& grid, const CameraView& cam, int M,
                        RenderMode mode);

// d loss / d grid-value for upstream images dL_dS (silhouette) and dL_dD
// (depth); pass an empty image to skip either term. Replays the forward
// march per pixel and scatters in fixed pixel order, so the result is
// independent of thread count.
std::vector<double> render_backward(const OccupancyGrid& grid, const CameraView& cam, int M,
                                    RenderMode mode, const Image& dL_dS, const Image& dL_dD);

struct SilhouetteLoss {
    double loss = 0.0;
    std::vector<Image> grads;  // d loss / d rendered, per view
};
// (1/V) * mean-per-pixel L1 across views.
SilhouetteLoss silhouette_loss(const std::vector<Image>& rendered,
                               const std::vector<Image>& measured);

struct DepthAlignment {
    double w = 0.0, q = 0.0;
    bool degenerate = false;  // constant d_hat: w forced to 0, q = mean d
    size_t n_valid = 0;
};
// least-squares (w,q) minimizing |w*d_hat + q - d|^2 over valid pixels
DepthAlignment depth_align(const Image& d_hat, const Image& d,
                           const std::vector<uint8_t>& valid);

struct DepthLoss {
    double loss = 0.0;
    std::vector<Image> grads;  // d loss / d rendered depth, per view
    std::vector<DepthAlignment> alignments;
    int skipped_views = 0;  // views with no valid pixels contribute 0
};
// Scale/shift-invariant L1: per view, align rendered depth to measured on
// pixels with measured >= 0 and weight >= w_min, then average |aligned - d|.
// The gradient differentiates through the closed-form (w,q).
DepthLoss depth_loss(const std::vector<RenderedView>& rendered,
                     const std::vector<Image>& measured, double w_min = 0.5);

}  // namespace realdiff
