#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "realdiff/geometry.hpp"
#include "realdiff/point_cloud.hpp"
#include "realdiff/rng.hpp"

namespace realdiff {

// Voxel indexing convention used everywhere (files, renderer, marching
// cubes): index = ix + nx*(iy + ny*iz), point -> cell by
// floor((p - origin) / voxel_size), cells half-open so points on the max
// boundary fall outside.
struct GridSpec {
    int nx = 0, ny = 0, nz = 0;
    double voxel_size = 0.0;
    Vec3 origin;

    size_t cell_count() const {
        return static_cast<size_t>(nx) * static_cast<size_t>(ny) * static_cast<size_t>(nz);
    }
    size_t index(int ix, int iy, int iz) const {
        return static_cast<size_t>(ix) +
               static_cast<size_t>(nx) * (static_cast<size_t>(iy) +
                                          static_cast<size_t>(ny) * static_cast<size_t>(iz));
    }
    bool contains(int ix, int iy, int iz) const {
        return ix >= 0 && ix < nx && iy >= 0 && iy < ny && iz >= 0 && iz < nz;
    }
    Vec3 voxel_center(int ix, int iy, int iz) const {
        return origin + Vec3{(ix + 0.5) * voxel_size, (iy + 0.5) * voxel_size,
                             (iz + 0.5) * voxel_size};
    }
    Aabb bounds() const {
        return {origin, origin + Vec3{nx * voxel_size, ny * voxel_size, nz * voxel_size}};
    }
    bool operator==(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz && voxel_size == o.voxel_size &&
               origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z;
    }

    void validate() const;
};

// Dense scalar field over a GridSpec. Binary occupancy and probability grids
// keep values in [0,1]; a grid with the noised flag set is a real-valued
// diffusion state and drops that range invariant.
struct OccupancyGrid {
    GridSpec spec;
    std::vector<double> values;
    bool noised = false;

    OccupancyGrid() = default;
    explicit OccupancyGrid(const GridSpec& s, double fill = 0.0)
        : spec(s), values(s.cell_count(), fill) {}

    double& at(int ix, int iy, int iz) { return values[spec.index(ix, iy, iz)]; }
    double at(int ix, int iy, int iz) const { return values[spec.index(ix, iy, iz)]; }

    bool is_binary() const;
    size_t occupied_count() const;  // values > 0.5 (exact 1.0 for binary grids)
};

// One bit per voxel; true marks the conditioned (occupied input) region.
struct ConditionMask {
    GridSpec spec;
    std::vector<uint8_t> bits;

    ConditionMask() = default;
    explicit ConditionMask(const GridSpec& s, bool fill = false)
        : spec(s), bits(s.cell_count(), fill ? 1 : 0) {}

    size_t true_count() const;
};

// Occupied = at least K points quantized into the voxel. Points outside the
// grid are discarded; non-finite coordinates reject the whole cloud.
OccupancyGrid voxelize(const PointCloud& pc, const GridSpec& spec, int threshold_k);

// Condition region of a binary grid: mask true exactly where the voxel is 1.
ConditionMask condition_split(const OccupancyGrid& x0);

// Indices of candidates whose union with `first` has at least
// (1+ratio) * occupied(first) occupied voxels. When first is empty every
// non-empty candidate qualifies.
std::vector<size_t> eligible_second_views(const OccupancyGrid& first,
                                          const std::vector<OccupancyGrid>& candidates,
                                          double ratio);

// Uniformly random pick among eligible_second_views; nullopt when none
// qualifies.
std::optional<size_t> select_second_view(const OccupancyGrid& first,
                                         const std::vector<OccupancyGrid>& candidates,
                                         double ratio, Rng& rng);

// Intersection-over-union of the occupied sets (values > 0.5). Two empty
// grids have IoU 1.
double occupied_iou(const OccupancyGrid& a, const OccupancyGrid& b);

// Sidecar pair <base>.grid.json / <base>.grid.bin (little-endian f32,
// x-fastest). Masks use the same pair with dtype u8.
void write_grid(const std::string& base_path, const OccupancyGrid& grid,
                const std::string& anchor = "");
OccupancyGrid read_grid(const std::string& base_path);
void write_mask(const std::string& base_path, const ConditionMask& mask);
ConditionMask read_mask(const std::string& base_path);

}  // namespace realdiff
