#pragma once

#include <string>
#include <vector>

#include "realdiff/geometry.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/point_cloud.hpp"
#include "realdiff/rng.hpp"

namespace realdiff {

enum class Category { ChairLike, TableLike, LampLike };

std::string category_to_string(Category c);
Category category_from_string(const std::string& s);

// Axis-aligned box or z-aligned capped cylinder with exact (Lipschitz-1)
// distance. Cylinders store radius in half.x (half.y mirrors it so bounds()
// stays uniform) and half height in half.z.
struct Primitive {
    enum class Kind { Box, Cylinder };
    Kind kind = Kind::Box;
    Vec3 center;
    Vec3 half;

    double sdf(const Vec3& p) const;
    Aabb bounds() const;
};

// Min-union of primitives. The union of Lipschitz-1 fields is Lipschitz-1,
// so sphere tracing and surface projection stay safe.
struct Scene {
    Category category = Category::ChairLike;
    std::vector<Primitive> primitives;

    double sdf(const Vec3& p) const;
    Vec3 sdf_gradient(const Vec3& p) const;  // central differences, unnormalized
    Aabb bounds() const;
};

// Randomized composition per category. Objects are built around the origin
// and always fit inside [-0.5, 0.5]^3; chair-like scenes use exactly six
// boxes (seat, back, four legs).
Scene make_scene(Category category, Rng& rng);

// Surface points obtained by Newton-projecting a seeds^3 lattice over the
// (slightly inflated) bounds onto the zero set; points that end up buried
// inside another primitive are discarded. Deterministic, no rng.
PointCloud sample_scene_surface(const Scene& scene, int seeds_per_axis);

// Reference occupancy: voxels containing surface, computed by quantizing a
// dense surface sampling with the same rule the view clouds use.
OccupancyGrid voxelize_scene(const Scene& scene, const GridSpec& spec, int seeds_per_axis = 64);

}  // namespace realdiff
