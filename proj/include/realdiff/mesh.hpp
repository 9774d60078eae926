#pragma once

#include <array>
#include <string>
#include <vector>

#include "realdiff/geometry.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/point_cloud.hpp"
#include "realdiff/rng.hpp"

namespace realdiff {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double area() const;
    // 6 * signed volume via the divergence theorem; positive for outward
    // orientation of a closed mesh
    double signed_volume6() const;
};

// Standard 256-case marching cubes over the voxel-center lattice, padded
// with one zero layer so occupied boundary voxels still close. Vertices are
// deduplicated per lattice edge; zero-area (<= 1e-12) triangles dropped.
// Triangles wind outward (occupied side is inside).
TriangleMesh marching_cubes(const OccupancyGrid& grid, double iso = 0.5);

// n points, triangles picked proportionally to area, uniform barycentric
// placement inside each.
PointCloud sample_surface(const TriangleMesh& mesh, size_t n, Rng& rng);

// ASCII PLY with vertex and face elements.
void write_mesh_ply(const std::string& path, const TriangleMesh& mesh);

}  // namespace realdiff
