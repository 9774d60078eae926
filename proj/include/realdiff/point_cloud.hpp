#pragma once

#include <string>
#include <vector>

#include "realdiff/geometry.hpp"

namespace realdiff {

enum class Frame { World, Camera };

struct PointCloud {
    std::vector<Vec3> points;
    Frame frame = Frame::World;

    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    Aabb bounds() const;
    Vec3 centroid() const;
};

// Concatenation of the two views' clouds, pc1's points first. Both clouds
// must be in the same world frame.
PointCloud merge_pseudo_gt(const PointCloud& pc1, const PointCloud& pc2);

// ASCII PLY, element vertex with float x/y/z. Reader accepts the files this
// project writes plus comment lines.
void write_ply(const std::string& path, const PointCloud& pc);
PointCloud read_ply(const std::string& path);

}  // namespace realdiff
