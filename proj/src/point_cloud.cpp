#include "realdiff/point_cloud.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace realdiff {

Aabb PointCloud::bounds() const {
    if (points.empty()) return {};
    Aabb box{points[0], points[0]};
    for (const Vec3& p : points) {
        box.lo = min(box.lo, p);
        box.hi = max(box.hi, p);
    }
    return box;
}

Vec3 PointCloud::centroid() const {
    Vec3 c;
    for (const Vec3& p : points) c += p;
    return points.empty() ? c : c / static_cast<double>(points.size());
}

PointCloud merge_pseudo_gt(const PointCloud& pc1, const PointCloud& pc2) {
    if (pc1.frame != pc2.frame)
        throw std::invalid_argument("merge_pseudo_gt: clouds are in different frames");
    PointCloud out;
    out.frame = pc1.frame;
    out.points.reserve(pc1.size() + pc2.size());
    out.points.insert(out.points.end(), pc1.points.begin(), pc1.points.end());
    out.points.insert(out.points.end(), pc2.points.begin(), pc2.points.end());
    return out;
}

void write_ply(const std::string& path, const PointCloud& pc) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_ply: cannot open " + path);
    f << "ply\nformat ascii 1.0\n";
    f << "element vertex " << pc.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "end_header\n";
    char line[128];
    for (const Vec3& p : pc.points) {
        std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n", static_cast<float>(p.x),
                      static_cast<float>(p.y), static_cast<float>(p.z));
        f << line;
    }
    if (!f) throw std::runtime_error("write_ply: write failed for " + path);
}

PointCloud read_ply(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_ply: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "ply")
        throw std::runtime_error("read_ply: not a PLY file: " + path);

    size_t n_vertices = 0;
    bool in_vertex = false;
    std::vector<std::string> vertex_props;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "comment") continue;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "ascii") throw std::runtime_error("read_ply: only ascii PLY supported");
        } else if (tok == "element") {
            std::string name;
            ss >> name;
            in_vertex = (name == "vertex");
            if (in_vertex) ss >> n_vertices;
        } else if (tok == "property" && in_vertex) {
            std::string type, name;
            ss >> type >> name;
            vertex_props.push_back(name);
        } else if (tok == "end_header") {
            break;
        }
    }

    int ix = -1, iy = -1, iz = -1;
    for (size_t i = 0; i < vertex_props.size(); ++i) {
        if (vertex_props[i] == "x") ix = static_cast<int>(i);
        if (vertex_props[i] == "y") iy = static_cast<int>(i);
        if (vertex_props[i] == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw std::runtime_error("read_ply: vertex element lacks x/y/z: " + path);

    PointCloud pc;
    pc.points.reserve(n_vertices);
    std::vector<double> row(vertex_props.size());
    for (size_t v = 0; v < n_vertices; ++v) {
        if (!std::getline(f, line)) throw std::runtime_error("read_ply: truncated file: " + path);
        std::istringstream ss(line);
        for (double& val : row)
            if (!(ss >> val)) throw std::runtime_error("read_ply: bad vertex row: " + path);
        pc.points.push_back({row[static_cast<size_t>(ix)], row[static_cast<size_t>(iy)],
                             row[static_cast<size_t>(iz)]});
    }
    return pc;
}

}  // namespace realdiff
