#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace realdiff {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    bool operator==(const Vec3& o) const = default;

    double norm() const { return std::sqrt(dot(*this)); }
    double squared_norm() const { return dot(*this); }
    Vec3 normalized() const { return *this / norm(); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
    double operator[](size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// Row-major 4x4 rigid transform (rotation + translation).
struct Mat4 {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static Mat4 identity() { return Mat4{}; }

    double& at(int r, int c) { return m[static_cast<size_t>(4 * r + c)]; }
    double at(int r, int c) const { return m[static_cast<size_t>(4 * r + c)]; }

    Vec3 apply_point(const Vec3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }

    Vec3 apply_dir(const Vec3& d) const {
        return {m[0] * d.x + m[1] * d.y + m[2] * d.z,
                m[4] * d.x + m[5] * d.y + m[6] * d.z,
                m[8] * d.x + m[9] * d.y + m[10] * d.z};
    }

    Vec3 translation() const { return {m[3], m[7], m[11]}; }

    // Inverse assuming the upper-left 3x3 block is a rotation.
    Mat4 rigid_inverse() const {
        Mat4 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out.at(r, c) = at(c, r);
        const Vec3 t = translation();
        const Vec3 ti = out.apply_dir(-t);
        out.m[3] = ti.x;
        out.m[7] = ti.y;
        out.m[11] = ti.z;
        return out;
    }

    Mat4 operator*(const Mat4& o) const {
        Mat4 out;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += at(r, k) * o.at(k, c);
                out.at(r, c) = s;
            }
        return out;
    }
};

struct Aabb {
    Vec3 lo{0, 0, 0};
    Vec3 hi{0, 0, 0};

    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
    double longest_edge() const {
        const Vec3 e = extent();
        return std::max(e.x, std::max(e.y, e.z));
    }

    // Slab test; returns false when the ray misses. tmin/tmax clipped to [t0, t1].
    bool intersect_ray(const Vec3& origin, const Vec3& dir, double& tmin, double& tmax,
                       double t0 = 0.0, double t1 = 1e30) const {
        tmin = t0;
        tmax = t1;
        for (int a = 0; a < 3; ++a) {
            const double o = origin[static_cast<size_t>(a)];
            const double d = dir[static_cast<size_t>(a)];
            const double l = lo[static_cast<size_t>(a)];
            const double h = hi[static_cast<size_t>(a)];
            if (std::abs(d) < 1e-300) {
                if (o < l || o > h) return false;
                continue;
            }
            double ta = (l - o) / d;
            double tb = (h - o) / d;
            if (ta > tb) std::swap(ta, tb);
            tmin = std::max(tmin, ta);
            tmax = std::min(tmax, tb);
            if (tmin > tmax) return false;
        }
        return true;
    }
};

}  // namespace realdiff
