#include <doctest.h>

#include <cmath>

#include "realdiff/geometry.hpp"

using namespace realdiff;

TEST_CASE("vec3 arithmetic and products") {
    Vec3 a{1, 2, 3}, b{4, -5, 6};
    CHECK((a + b).x == 5.0);
    CHECK((a - b).y == 7.0);
    CHECK((a * 2.0).z == 6.0);
    CHECK(a.dot(b) == doctest::Approx(12.0));
    Vec3 c = a.cross(b);
    CHECK(c.x == doctest::Approx(27.0));
    CHECK(c.y == doctest::Approx(6.0));
    CHECK(c.z == doctest::Approx(-13.0));
    CHECK(a.cross(b).dot(a) == doctest::Approx(0.0));
    CHECK(Vec3{3, 4, 0}.norm() == doctest::Approx(5.0));
    CHECK(Vec3{0, 0, 9}.normalized().z == doctest::Approx(1.0));
}

TEST_CASE("mat4 point/direction transforms and rigid inverse") {
    // rotation of 90 degrees about z plus a translation
    Mat4 m = Mat4::identity();
    m.m[0] = 0; m.m[1] = -1; m.m[4] = 1; m.m[5] = 0;
    m.m[3] = 10; m.m[7] = 20; m.m[11] = 30;

    Vec3 p = m.apply_point({1, 0, 0});
    CHECK(p.x == doctest::Approx(10.0));
    CHECK(p.y == doctest::Approx(21.0));
    CHECK(p.z == doctest::Approx(30.0));

    Vec3 d = m.apply_dir({1, 0, 0});
    CHECK(d.x == doctest::Approx(0.0));
    CHECK(d.y == doctest::Approx(1.0));
    CHECK(d.z == doctest::Approx(0.0));

    Mat4 inv = m.rigid_inverse();
    Vec3 back = inv.apply_point(p);
    CHECK(back.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(back.z == doctest::Approx(0.0).epsilon(1e-12));

    Mat4 prod = m * inv;
    for (int i = 0; i < 16; ++i)
        CHECK(prod.m[i] == doctest::Approx(Mat4::identity().m[i]).epsilon(1e-12));
}

TEST_CASE("aabb ray intersection: hit, miss, and inside start") {
    Aabb box{{0, 0, 0}, {1, 1, 1}};
    double t0, t1;

    CHECK(box.intersect_ray({-1, 0.5, 0.5}, {1, 0, 0}, t0, t1));
    CHECK(t0 == doctest::Approx(1.0));
    CHECK(t1 == doctest::Approx(2.0));

    CHECK(!box.intersect_ray({-1, 2.0, 0.5}, {1, 0, 0}, t0, t1));

    // origin inside: entry clamps to 0
    CHECK(box.intersect_ray({0.5, 0.5, 0.5}, {0, 0, 1}, t0, t1));
    CHECK(t0 == doctest::Approx(0.0));
    CHECK(t1 == doctest::Approx(0.5));

    // axis-parallel ray outside the slab
    CHECK(!box.intersect_ray({2, 0.5, 0.5}, {0, 1, 0}, t0, t1));

    // diagonal through the corner region
    Vec3 dir = Vec3{1, 1, 1}.normalized();
    CHECK(box.intersect_ray({-0.5, -0.5, -0.5}, dir, t0, t1));
    CHECK(t0 == doctest::Approx(0.5 * std::sqrt(3.0)));
}

TEST_CASE("aabb center and longest edge") {
    Aabb box{{-1, 0, 2}, {3, 1, 4}};
    CHECK(box.center().x == doctest::Approx(1.0));
    CHECK(box.extent().x == doctest::Approx(4.0));
    CHECK(box.longest_edge() == doctest::Approx(4.0));
}
