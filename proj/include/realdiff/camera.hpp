#pragma once

#include <string>
#include <vector>

#include "realdiff/geometry.hpp"
#include "realdiff/image.hpp"

namespace realdiff {

// Pinhole camera with optional measured silhouette/depth attached. Camera
// frame: x right, y down, z forward; pixel centers at half-integer
// coordinates. Invalid depth pixels carry -1.
struct CameraView {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat4 cam_to_world = Mat4::identity();

    Image silhouette;  // optional, {0,1}
    Image depth;       // optional, meters, -1 invalid

    Vec3 center() const { return cam_to_world.translation(); }
    void validate() const;  // intrinsics positive, rotation orthonormal to 1e-6
};

struct Ray {
    Vec3 origin, dir;
};

// One world-space ray per pixel, row-major. Direction through the pixel
// center, unit length.
std::vector<Ray> generate_rays(const CameraView& cam);
Ray pixel_ray(const CameraView& cam, int u, int v);

// Pose with the z-axis aimed at target; up breaks the roll ambiguity.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

// {fx,fy,cx,cy,width,height,cam_to_world:[16 row-major]}; attached images
// are not part of this file.
void write_camera_json(const std::string& path, const CameraView& cam);
CameraView read_camera_json(const std::string& path);

}  // namespace realdiff
