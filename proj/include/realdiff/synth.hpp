#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "realdiff/camera.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/image.hpp"
#include "realdiff/point_cloud.hpp"
#include "realdiff/rng.hpp"
#include "realdiff/sdf.hpp"

namespace realdiff {

// One simulated depth-camera capture: the camera with its measured
// silhouette/depth attached, plus the back-projected world-frame cloud.
// Dropped (sensor-hole) pixels keep their silhouette bit but lose their
// depth, so the cloud only covers the surviving pixels.
struct Observation {
    CameraView view;
    PointCloud cloud;
    double noise_sigma = 0.0;
    double dropout_p = 0.0;
};

// Distance to the first surface crossing along the ray, -1 on miss. The ray
// starts outside (Lipschitz-1 field, so steps never overshoot); rays that
// fail to converge within max_iter count as misses.
double sphere_trace(const Scene& scene, const Ray& ray, double t_max, double tol = 1e-5,
                    int max_iter = 256);

// Simulates one capture. Per-pixel randoms (depth noise, dropout) are drawn
// serially in row-major order before the parallel trace, so results do not
// depend on thread count. Requires the camera center outside the object.
Observation render_observation(const Scene& scene, const CameraView& cam, double noise_sigma,
                               double dropout_p, Rng& rng);

// World-frame points origin + D * dir for every pixel with silhouette 1 and
// valid (>= 0) depth, in row-major pixel order.
PointCloud backproject(const Image& depth, const Image& silhouette, const CameraView& cam);

// Stand-in for a monocular depth network: valid-masked box blur of radius r
// followed by the affine map a * blurred + b. Invalid pixels stay invalid.
Image mono_depth_surrogate(const Image& depth, int blur_radius, double a, double b);

// Drops the n points furthest from viewpoint; distance ties keep the
// earlier point. Remaining points preserve input order.
PointCloud crop_furthest(const PointCloud& pc, const Vec3& viewpoint, size_t n);

// n cameras on a ring of radius 2.5 * longest bbox edge around the object
// center, azimuth jittered around even spacing, elevation alternating above
// and below the equator so undersides get covered too.
std::vector<CameraView> make_camera_ring(const Aabb& object_bounds, int n_views, int image_size,
                                         Rng& rng);

// Keeps n uniformly chosen points (original order); identity when the cloud
// is already small enough.
PointCloud subsample_cloud(const PointCloud& pc, size_t n, Rng& rng);

struct DatasetParams {
    int n_objects = 8;
    int views_per_object = 8;  // >= 8
    int image_size = 64;
    int grid_n = 16;
    double voxel_size = 1.0 / 16.0;
    double noise_sigma = -1.0;  // < 0 selects the default 0.5 * voxel_size
    double dropout_p = 0.1;
    int points_per_cloud = 2048;
    double second_view_ratio = 0.3;
    std::vector<Category> categories;  // cycled over objects; empty = all three

    double effective_sigma() const { return noise_sigma < 0 ? 0.5 * voxel_size : noise_sigma; }
    void validate() const;
};

// One generated object with everything training and evaluation need. The
// grid is anchored on the bounding-box center of the union of all views'
// clouds; view_grids are the per-view voxelizations on that shared grid.
struct ObjectRecord {
    std::string id;
    Category category = Category::ChairLike;
    GridSpec grid;
    OccupancyGrid gt;
    std::vector<Observation> views;
    std::vector<OccupancyGrid> view_grids;
    uint64_t ring_attempt = 0;  // camera rings redrawn until the view invariants hold
};

// Procedural dataset: for each object draws a scene, a camera ring and per
// view captures, redrawing the ring (fresh rng streams) until every view
// has at least one eligible second view. Writes
// <out_dir>/<id>/view_<k>.{pfm,pgm,json,ply}, <id>/gt.grid.{json,bin} and a
// top-level manifest.json, and returns the in-memory records.
std::vector<ObjectRecord> generate_dataset(const DatasetParams& params, uint64_t master_seed,
                                           const std::string& out_dir);

// Same records rebuilt from disk (view grids re-voxelized from the clouds).
std::vector<ObjectRecord> load_dataset(const std::string& dir);

}  // namespace realdiff
