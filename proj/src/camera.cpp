#include "realdiff/camera.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace realdiff {

void CameraView::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("CameraView: fx, fy must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("CameraView: bad image size");
    // columns of the rotation block must be orthonormal
    Vec3 col[3];
    for (int c = 0; c < 3; ++c) col[c] = {cam_to_world.m[c], cam_to_world.m[4 + c], cam_to_world.m[8 + c]};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double want = a == b ? 1.0 : 0.0;
            if (std::abs(col[a].dot(col[b]) - want) > 1e-6)
                throw std::invalid_argument("CameraView: rotation part not orthonormal");
        }
}

Ray pixel_ray(const CameraView& cam, int u, int v) {
    Vec3 d_cam{(u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0};
    Ray r;
    r.origin = cam.center();
    r.dir = cam.cam_to_world.apply_dir(d_cam.normalized());
    return r;
}

std::vector<Ray> generate_rays(const CameraView& cam) {
    cam.validate();
    std::vector<Ray> rays(static_cast<size_t>(cam.width) * cam.height);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < cam.height; ++v)
        for (int u = 0; u < cam.width; ++u)
            rays[static_cast<size_t>(v) * cam.width + u] = pixel_ray(cam, u, v);
    return rays;
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    Vec3 f = target - eye;
    if (f.norm() < 1e-12) throw std::invalid_argument("look_at: eye equals target");
    f = f.normalized();
    Vec3 r = f.cross(up);
    if (r.norm() < 1e-9) throw std::invalid_argument("look_at: view direction parallel to up");
    r = r.normalized();
    Vec3 d = f.cross(r);  // camera y, pointing world-down

    Mat4 m = Mat4::identity();
    m.m[0] = r.x; m.m[1] = d.x; m.m[2] = f.x; m.m[3] = eye.x;
    m.m[4] = r.y; m.m[5] = d.y; m.m[6] = f.y; m.m[7] = eye.y;
    m.m[8] = r.z; m.m[9] = d.z; m.m[10] = f.z; m.m[11] = eye.z;
    return m;
}

void write_camera_json(const std::string& path, const CameraView& cam) {
    cam.validate();
    nlohmann::json j = {{"fx", cam.fx},       {"fy", cam.fy},
                        {"cx", cam.cx},       {"cy", cam.cy},
                        {"width", cam.width}, {"height", cam.height}};
    j["cam_to_world"] = nlohmann::json::array();
    for (double x : cam.cam_to_world.m) j["cam_to_world"].push_back(x);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << j.dump(2) << "\n";
}

CameraView read_camera_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    CameraView cam;
    try {
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        const auto& m = j.at("cam_to_world");
        if (m.size() != 16) throw std::runtime_error("cam_to_world must have 16 entries");
        for (size_t i = 0; i < 16; ++i) cam.cam_to_world.m[i] = m[i].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    cam.validate();
    return cam;
}

}  // namespace realdiff
