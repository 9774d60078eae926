#include "realdiff/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace realdiff {

std::string category_to_string(Category c) {
    switch (c) {
        case Category::ChairLike: return "chair-like";
        case Category::TableLike: return "table-like";
        case Category::LampLike: return "lamp-like";
    }
    throw std::invalid_argument("category_to_string: unknown category");
}

Category category_from_string(const std::string& s) {
    if (s == "chair-like") return Category::ChairLike;
    if (s == "table-like") return Category::TableLike;
    if (s == "lamp-like") return Category::LampLike;
    throw std::invalid_argument("unknown category: " + s);
}

double Primitive::sdf(const Vec3& p) const {
    const Vec3 q{std::abs(p.x - center.x), std::abs(p.y - center.y), std::abs(p.z - center.z)};
    if (kind == Kind::Box) {
        const double ex = q.x - half.x, ey = q.y - half.y, ez = q.z - half.z;
        const double ox = std::max(ex, 0.0), oy = std::max(ey, 0.0), oz = std::max(ez, 0.0);
        return std::sqrt(ox * ox + oy * oy + oz * oz) +
               std::min(std::max(ex, std::max(ey, ez)), 0.0);
    }
    // capped cylinder: radial distance vs cap distance, combined exactly
    const double dr = std::sqrt(q.x * q.x + q.y * q.y) - half.x;
    const double dz = q.z - half.z;
    const double orr = std::max(dr, 0.0), oz = std::max(dz, 0.0);
    return std::min(std::max(dr, dz), 0.0) + std::sqrt(orr * orr + oz * oz);
}

Aabb Primitive::bounds() const {
    return {center - half, center + half};
}

double Scene::sdf(const Vec3& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const Primitive& prim : primitives) d = std::min(d, prim.sdf(p));
    return d;
}

Vec3 Scene::sdf_gradient(const Vec3& p) const {
    const double h = 1e-6;
    return {(sdf({p.x + h, p.y, p.z}) - sdf({p.x - h, p.y, p.z})) / (2 * h),
            (sdf({p.x, p.y + h, p.z}) - sdf({p.x, p.y - h, p.z})) / (2 * h),
            (sdf({p.x, p.y, p.z + h}) - sdf({p.x, p.y, p.z - h})) / (2 * h)};
}

Aabb Scene::bounds() const {
    if (primitives.empty()) throw std::logic_error("Scene::bounds: no primitives");
    Aabb box = primitives[0].bounds();
    for (size_t i = 1; i < primitives.size(); ++i) {
        const Aabb b = primitives[i].bounds();
        box.lo = min(box.lo, b.lo);
        box.hi = max(box.hi, b.hi);
    }
    return box;
}

namespace {

Primitive box(Vec3 center, Vec3 half) {
    return {Primitive::Kind::Box, center, half};
}

Primitive cylinder(Vec3 center, double radius, double half_height) {
    return {Primitive::Kind::Cylinder, center, {radius, radius, half_height}};
}

constexpr double kFloorZ = -0.45;  // feet rest here; cube boundary at -0.5

Scene make_chair(Rng& rng) {
    const double hx = rng.uniform(0.24, 0.32);   // seat half width
    const double hy = rng.uniform(0.20, 0.28);   // seat half depth
    const double ht = rng.uniform(0.015, 0.03);  // seat half thickness
    const double zs = rng.uniform(-0.10, 0.0);   // seat center height
    const double bt = rng.uniform(0.015, 0.025);  // backrest half thickness
    const double zt = rng.uniform(0.30, 0.44);    // backrest top
    const double lw = rng.uniform(0.018, 0.032);  // leg half width

    Scene s;
    s.category = Category::ChairLike;
    s.primitives.push_back(box({0, 0, zs}, {hx, hy, ht}));
    s.primitives.push_back(box({0, hy - bt, (zs + zt) / 2}, {0.9 * hx, bt, (zt - zs) / 2}));
    for (const double sx : {-1.0, 1.0})
        for (const double sy : {-1.0, 1.0})
            s.primitives.push_back(
                box({sx * (hx - lw), sy * (hy - lw), (kFloorZ + zs) / 2},
                    {lw, lw, (zs - kFloorZ) / 2}));
    return s;
}

Scene make_table(Rng& rng) {
    const double hx = rng.uniform(0.28, 0.38);
    const double hy = rng.uniform(0.22, 0.32);
    const double ht = rng.uniform(0.015, 0.03);
    const double zt = rng.uniform(0.05, 0.15);  // tabletop center height
    const double lr = rng.uniform(0.02, 0.03);  // leg radius

    Scene s;
    s.category = Category::TableLike;
    s.primitives.push_back(box({0, 0, zt}, {hx, hy, ht}));
    for (const double sx : {-1.0, 1.0})
        for (const double sy : {-1.0, 1.0})
            s.primitives.push_back(cylinder({sx * (hx - 2 * lr), sy * (hy - 2 * lr),
                                             (kFloorZ + zt) / 2},
                                            lr, (zt - kFloorZ) / 2));
    return s;
}

Scene make_lamp(Rng& rng) {
    const double br = rng.uniform(0.10, 0.16);    // base radius
    const double bh = rng.uniform(0.015, 0.03);   // base half height
    const double pr = rng.uniform(0.015, 0.025);  // pole radius
    const double zp = rng.uniform(0.12, 0.26);    // pole top
    const double sr = rng.uniform(0.10, 0.18);    // shade radius
    const double sh = rng.uniform(0.06, 0.09);    // shade half height

    Scene s;
    s.category = Category::LampLike;
    s.primitives.push_back(cylinder({0, 0, kFloorZ + bh}, br, bh));
    s.primitives.push_back(cylinder({0, 0, (kFloorZ + zp) / 2}, pr, (zp - kFloorZ) / 2));
    s.primitives.push_back(cylinder({0, 0, zp + sh}, sr, sh));
    return s;
}

}  // namespace

Scene make_scene(Category category, Rng& rng) {
    switch (category) {
        case Category::ChairLike: return make_chair(rng);
        case Category::TableLike: return make_table(rng);
        case Category::LampLike: return make_lamp(rng);
    }
    throw std::invalid_argument("make_scene: unknown category");
}

PointCloud sample_scene_surface(const Scene& scene, int seeds_per_axis) {
    if (seeds_per_axis < 2) throw std::invalid_argument("sample_scene_surface: need >= 2 seeds");
    const Aabb box = scene.bounds();
    const Vec3 ext = box.extent();
    const double pad = 0.02;
    const int n = seeds_per_axis;

    const size_t total = static_cast<size_t>(n) * n * n;
    std::vector<Vec3> projected(total);
    std::vector<uint8_t> ok(total, 0);

#pragma omp parallel for collapse(2) schedule(static)
    for (int iz = 0; iz < n; ++iz) {
        for (int iy = 0; iy < n; ++iy) {
            for (int ix = 0; ix < n; ++ix) {
                Vec3 p{box.lo.x - pad + (ext.x + 2 * pad) * (ix + 0.5) / n,
                       box.lo.y - pad + (ext.y + 2 * pad) * (iy + 0.5) / n,
                       box.lo.z - pad + (ext.z + 2 * pad) * (iz + 0.5) / n};
                for (int it = 0; it < 8; ++it) {
                    const double d = scene.sdf(p);
                    if (std::abs(d) < 1e-9) break;
                    Vec3 g = scene.sdf_gradient(p);
                    const double gl = g.norm();
                    if (gl < 1e-12) break;  // degenerate spot (crease center)
                    p = p - g * (d / gl);
                }
                const size_t i = static_cast<size_t>(ix) +
                                 static_cast<size_t>(n) *
                                     (static_cast<size_t>(iy) + static_cast<size_t>(n) * iz);
                projected[i] = p;
                // points whose nearest primitive patch is buried inside a
                // neighbor end up with sdf < 0 and are dropped here
                ok[i] = std::abs(scene.sdf(p)) <= 1e-5 ? 1 : 0;
            }
        }
    }

    PointCloud pc;
    pc.frame = Frame::World;
    for (size_t i = 0; i < total; ++i)
        if (ok[i]) pc.points.push_back(projected[i]);
    return pc;
}

OccupancyGrid voxelize_scene(const Scene& scene, const GridSpec& spec, int seeds_per_axis) {
    return voxelize(sample_scene_surface(scene, seeds_per_axis), spec, 1);
}

}  // namespace realdiff
