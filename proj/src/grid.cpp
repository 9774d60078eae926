#include "realdiff/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace realdiff {

void GridSpec::validate() const {
    if (nx <= 0 || ny <= 0 || nz <= 0)
        throw std::invalid_argument("GridSpec: dims must be positive");
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
        throw std::invalid_argument("GridSpec: voxel_size must be positive and finite");
    if (!origin.finite()) throw std::invalid_argument("GridSpec: origin must be finite");
}

bool OccupancyGrid::is_binary() const {
    for (double v : values)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

size_t OccupancyGrid::occupied_count() const {
    size_t n = 0;
    for (double v : values)
        if (v > 0.5) ++n;
    return n;
}

size_t ConditionMask::true_count() const {
    size_t n = 0;
    for (uint8_t b : bits)
        if (b) ++n;
    return n;
}

OccupancyGrid voxelize(const PointCloud& pc, const GridSpec& spec, int threshold_k) {
    spec.validate();
    if (threshold_k < 1) throw std::invalid_argument("voxelize: K must be >= 1");
    if (pc.frame != Frame::World) throw std::invalid_argument("voxelize: cloud must be in world frame");

    const size_t n_cells = spec.cell_count();
    std::vector<int> counts(n_cells, 0);
    const long n_pts = static_cast<long>(pc.points.size());
    const double inv = 1.0 / spec.voxel_size;

    bool bad = false;
#pragma omp parallel for schedule(static) reduction(|| : bad)
    for (long i = 0; i < n_pts; ++i) {
        const Vec3& p = pc.points[i];
        if (!p.finite()) {
            bad = true;
            continue;
        }
        // atomic int increments commute, so the counts (and the output) do
        // not depend on thread count
        int ix = static_cast<int>(std::floor((p.x - spec.origin.x) * inv));
        int iy = static_cast<int>(std::floor((p.y - spec.origin.y) * inv));
        int iz = static_cast<int>(std::floor((p.z - spec.origin.z) * inv));
        if (!spec.contains(ix, iy, iz)) continue;  // half-open: max boundary discarded
        int* cell = &counts[spec.index(ix, iy, iz)];
#pragma omp atomic
        ++*cell;
    }
    if (bad) throw std::invalid_argument("voxelize: non-finite point coordinate");

    OccupancyGrid grid(spec);
    const long n_cells_l = static_cast<long>(n_cells);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < n_cells_l; ++c)
        grid.values[c] = counts[c] >= threshold_k ? 1.0 : 0.0;
    return grid;
}

ConditionMask condition_split(const OccupancyGrid& x0) {
    if (!x0.is_binary()) throw std::invalid_argument("condition_split: grid must be binary");
    ConditionMask mask(x0.spec);
    for (size_t i = 0; i < x0.values.size(); ++i) mask.bits[i] = x0.values[i] == 1.0 ? 1 : 0;
    return mask;
}

std::vector<size_t> eligible_second_views(const OccupancyGrid& first,
                                          const std::vector<OccupancyGrid>& candidates,
                                          double ratio) {
    if (!first.is_binary())
        throw std::invalid_argument("eligible_second_views: first must be binary");
    const size_t base = first.occupied_count();
    const double need = (1.0 + ratio) * static_cast<double>(base);

    std::vector<size_t> eligible;
    for (size_t c = 0; c < candidates.size(); ++c) {
        const OccupancyGrid& cand = candidates[c];
        if (!(cand.spec == first.spec))
            throw std::invalid_argument("eligible_second_views: mismatched grid specs");
        size_t uni = 0;
        for (size_t i = 0; i < cand.values.size(); ++i)
            if (first.values[i] > 0.5 || cand.values[i] > 0.5) ++uni;
        if (base == 0) {
            // an empty first view carries no occupancy to grow by 30%; any
            // candidate that contributes voxels at all qualifies
            if (uni > 0) eligible.push_back(c);
        } else if (static_cast<double>(uni) >= need) {
            eligible.push_back(c);
        }
    }
    return eligible;
}

std::optional<size_t> select_second_view(const OccupancyGrid& first,
                                         const std::vector<OccupancyGrid>& candidates,
                                         double ratio, Rng& rng) {
    const std::vector<size_t> eligible = eligible_second_views(first, candidates, ratio);
    if (eligible.empty()) return std::nullopt;
    return eligible[rng.below(eligible.size())];
}

double occupied_iou(const OccupancyGrid& a, const OccupancyGrid& b) {
    if (!(a.spec == b.spec)) throw std::invalid_argument("occupied_iou: mismatched grid specs");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        const bool oa = a.values[i] > 0.5, ob = b.values[i] > 0.5;
        inter += (oa && ob) ? 1 : 0;
        uni += (oa || ob) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void write_bin(const std::string& path, const void* data, size_t bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<char> read_bin(const std::string& path, size_t expect_bytes) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path);
    const auto size = static_cast<size_t>(f.tellg());
    if (size != expect_bytes)
        throw std::runtime_error(path + ": expected " + std::to_string(expect_bytes) +
                                 " bytes, found " + std::to_string(size));
    std::vector<char> buf(size);
    f.seekg(0);
    f.read(buf.data(), static_cast<std::streamsize>(size));
    if (!f) throw std::runtime_error("read failed: " + path);
    return buf;
}

nlohmann::json spec_to_json(const GridSpec& spec, const char* dtype, bool noised) {
    return {{"dims", {spec.nx, spec.ny, spec.nz}},
            {"voxel_size", spec.voxel_size},
            {"origin", {spec.origin.x, spec.origin.y, spec.origin.z}},
            {"dtype", dtype},
            {"order", "x-fastest"},
            {"noised", noised}};
}

GridSpec spec_from_json(const nlohmann::json& j, const std::string& path,
                        const std::string& want_dtype) {
    for (const char* key : {"dims", "voxel_size", "origin", "dtype", "order"})
        if (!j.contains(key)) throw std::runtime_error(path + ": missing key '" + key + "'");
    if (j.at("dtype").get<std::string>() != want_dtype)
        throw std::runtime_error(path + ": dtype must be '" + want_dtype + "'");
    if (j.at("order").get<std::string>() != "x-fastest")
        throw std::runtime_error(path + ": order must be 'x-fastest'");
    const auto& dims = j.at("dims");
    const auto& org = j.at("origin");
    if (dims.size() != 3 || org.size() != 3)
        throw std::runtime_error(path + ": dims and origin must have 3 entries");
    GridSpec spec;
    spec.nx = dims[0].get<int>();
    spec.ny = dims[1].get<int>();
    spec.nz = dims[2].get<int>();
    spec.voxel_size = j.at("voxel_size").get<double>();
    spec.origin = {org[0].get<double>(), org[1].get<double>(), org[2].get<double>()};
    spec.validate();
    return spec;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

}  // namespace

void write_grid(const std::string& base_path, const OccupancyGrid& grid,
                const std::string& anchor) {
    grid.spec.validate();
    if (grid.values.size() != grid.spec.cell_count())
        throw std::invalid_argument("write_grid: value count does not match dims");
    nlohmann::json j = spec_to_json(grid.spec, "f32", grid.noised);
    if (!anchor.empty()) j["anchor"] = anchor;
    std::ofstream jf(base_path + ".grid.json");
    if (!jf) throw std::runtime_error("cannot open for write: " + base_path + ".grid.json");
    jf << j.dump(2) << "\n";

    std::vector<float> f32(grid.values.begin(), grid.values.end());
    write_bin(base_path + ".grid.bin", f32.data(), f32.size() * sizeof(float));
}

OccupancyGrid read_grid(const std::string& base_path) {
    const std::string jpath = base_path + ".grid.json";
    nlohmann::json j = load_json(jpath);
    OccupancyGrid grid(spec_from_json(j, jpath, "f32"));
    grid.noised = j.value("noised", false);

    auto buf = read_bin(base_path + ".grid.bin", grid.spec.cell_count() * sizeof(float));
    const float* f32 = reinterpret_cast<const float*>(buf.data());
    for (size_t i = 0; i < grid.values.size(); ++i) grid.values[i] = f32[i];
    return grid;
}

void write_mask(const std::string& base_path, const ConditionMask& mask) {
    mask.spec.validate();
    if (mask.bits.size() != mask.spec.cell_count())
        throw std::invalid_argument("write_mask: bit count does not match dims");
    nlohmann::json j = spec_to_json(mask.spec, "u8", false);
    std::ofstream jf(base_path + ".grid.json");
    if (!jf) throw std::runtime_error("cannot open for write: " + base_path + ".grid.json");
    jf << j.dump(2) << "\n";
    write_bin(base_path + ".grid.bin", mask.bits.data(), mask.bits.size());
}

ConditionMask read_mask(const std::string& base_path) {
    const std::string jpath = base_path + ".grid.json";
    nlohmann::json j = load_json(jpath);
    ConditionMask mask(spec_from_json(j, jpath, "u8"));
    auto buf = read_bin(base_path + ".grid.bin", mask.spec.cell_count());
    for (size_t i = 0; i < mask.bits.size(); ++i)
        mask.bits[i] = static_cast<uint8_t>(buf[i]) ? 1 : 0;
    return mask;
}

}  // namespace realdiff
