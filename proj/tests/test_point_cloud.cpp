#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "realdiff/point_cloud.hpp"

using namespace realdiff;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("merge keeps order: first cloud then second") {
    PointCloud a, b;
    a.points = {{1, 0, 0}, {2, 0, 0}};
    b.points = {{3, 0, 0}, {4, 0, 0}, {5, 0, 0}};
    PointCloud m = merge_pseudo_gt(a, b);
    REQUIRE(m.size() == 5);
    CHECK(m.points[0].x == 1.0);
    CHECK(m.points[1].x == 2.0);
    CHECK(m.points[2].x == 3.0);
    CHECK(m.points[4].x == 5.0);
}

TEST_CASE("merge with empty operand is identity") {
    PointCloud a, empty;
    a.points = {{1, 2, 3}};
    CHECK(merge_pseudo_gt(a, empty).size() == 1);
    CHECK(merge_pseudo_gt(empty, a).size() == 1);
    CHECK(merge_pseudo_gt(empty, empty).size() == 0);
}

TEST_CASE("merge rejects mismatched frames") {
    PointCloud a, b;
    a.frame = Frame::World;
    b.frame = Frame::Camera;
    CHECK_THROWS_AS(merge_pseudo_gt(a, b), std::invalid_argument);
}

TEST_CASE("ply round trip preserves points to float precision") {
    PointCloud pc;
    pc.points = {{0.125, -3.5, 7.25}, {1e-3, 2e3, -0.0625}, {0, 0, 0}};
    std::string path = tmp_path("rt_test.ply");
    write_ply(path, pc);
    PointCloud back = read_ply(path);
    REQUIRE(back.size() == pc.size());
    for (size_t i = 0; i < pc.size(); ++i) {
        CHECK(back.points[i].x == doctest::Approx(pc.points[i].x).epsilon(1e-6));
        CHECK(back.points[i].y == doctest::Approx(pc.points[i].y).epsilon(1e-6));
        CHECK(back.points[i].z == doctest::Approx(pc.points[i].z).epsilon(1e-6));
    }
    std::filesystem::remove(path);
}

TEST_CASE("ply reader handles comments and extra properties") {
    std::string path = tmp_path("extra_test.ply");
    {
        std::ofstream f(path);
        f << "ply\nformat ascii 1.0\ncomment made by hand\n"
          << "element vertex 2\n"
          << "property float x\nproperty float y\nproperty float z\n"
          << "property uchar red\n"
          << "end_header\n"
          << "1 2 3 255\n4 5 6 0\n";
    }
    PointCloud pc = read_ply(path);
    REQUIRE(pc.size() == 2);
    CHECK(pc.points[1].y == doctest::Approx(5.0));
    std::filesystem::remove(path);
}

TEST_CASE("ply reader rejects binary format and truncated files") {
    std::string pb = tmp_path("bin_test.ply");
    {
        std::ofstream f(pb);
        f << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
          << "property float x\nproperty float y\nproperty float z\nend_header\n";
    }
    CHECK_THROWS(read_ply(pb));
    std::filesystem::remove(pb);

    std::string pt = tmp_path("trunc_test.ply");
    {
        std::ofstream f(pt);
        f << "ply\nformat ascii 1.0\nelement vertex 3\n"
          << "property float x\nproperty float y\nproperty float z\nend_header\n"
          << "1 2 3\n";
    }
    CHECK_THROWS(read_ply(pt));
    std::filesystem::remove(pt);
}

TEST_CASE("bounds and centroid") {
    PointCloud pc;
    pc.points = {{0, 0, 0}, {2, 4, 6}, {1, 1, 1}};
    Aabb b = pc.bounds();
    CHECK(b.lo.x == 0.0);
    CHECK(b.hi.y == 4.0);
    Vec3 c = pc.centroid();
    CHECK(c.x == doctest::Approx(1.0));
    CHECK(c.y == doctest::Approx(5.0 / 3));
    CHECK(c.z == doctest::Approx(7.0 / 3));
}
