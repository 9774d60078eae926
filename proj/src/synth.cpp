#include "realdiff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace realdiff {

double sphere_trace(const Scene& scene, const Ray& ray, double t_max, double tol, int max_iter) {
    double t = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double d = scene.sdf(ray.origin + ray.dir * t);
        if (d < tol) return t;
        t += d;
        if (t > t_max) return -1.0;
    }
    return -1.0;  // non-convergence counts as a miss
}

Observation render_observation(const Scene& scene, const CameraView& cam, double noise_sigma,
                               double dropout_p, Rng& rng) {
    cam.validate();
    if (noise_sigma < 0) throw std::invalid_argument("render_observation: negative noise sigma");
    if (dropout_p < 0 || dropout_p > 1)
        throw std::invalid_argument("render_observation: dropout_p outside [0,1]");
    if (scene.sdf(cam.center()) <= 0)
        throw std::invalid_argument("render_observation: camera center inside the object");

    // one normal (depth noise) and one uniform (dropout) per pixel, drawn
    // up front in row-major order; the trace itself consumes no randomness
    const size_t n_pix = static_cast<size_t>(cam.width) * cam.height;
    std::vector<double> noise(n_pix), drop(n_pix);
    for (size_t i = 0; i < n_pix; ++i) {
        noise[i] = rng.normal();
        drop[i] = rng.uniform();
    }

    const Aabb box = scene.bounds();
    const Vec3 eye = cam.center();
    const double t_max = (box.center() - eye).norm() + 0.5 * box.extent().norm() + 1.0;

    Observation obs;
    obs.view = cam;
    obs.noise_sigma = noise_sigma;
    obs.dropout_p = dropout_p;
    obs.view.silhouette = Image(cam.width, cam.height, 0.0);
    obs.view.depth = Image(cam.width, cam.height, -1.0);

#pragma omp parallel for schedule(static)
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const double t = sphere_trace(scene, pixel_ray(cam, u, v), t_max);
            if (t < 0) continue;
            const size_t i = static_cast<size_t>(v) * cam.width + u;
            obs.view.silhouette.at(u, v) = 1.0;
            if (drop[i] < dropout_p) continue;  // sensor hole: depth stays invalid
            obs.view.depth.at(u, v) = t + noise_sigma * noise[i];
        }
    }

    obs.cloud = backproject(obs.view.depth, obs.view.silhouette, cam);
    return obs;
}

PointCloud backproject(const Image& depth, const Image& silhouette, const CameraView& cam) {
    if (depth.width != cam.width || depth.height != cam.height || !depth.same_size(silhouette))
        throw std::invalid_argument("backproject: image sizes do not match the camera");
    PointCloud pc;
    pc.frame = Frame::World;
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const double s = silhouette.at(u, v);
            if (s != 0.0 && s != 1.0)
                throw std::invalid_argument("backproject: silhouette must be binary");
            if (s != 1.0) continue;
            const double d = depth.at(u, v);
            if (d < 0) continue;
            const Ray ray = pixel_ray(cam, u, v);
            pc.points.push_back(ray.origin + ray.dir * d);
        }
    }
    return pc;
}

Image mono_depth_surrogate(const Image& depth, int blur_radius, double a, double b) {
    if (a == 0.0) throw std::invalid_argument("mono_depth_surrogate: a must be nonzero");
    if (blur_radius < 0) throw std::invalid_argument("mono_depth_surrogate: negative blur radius");

    Image out(depth.width, depth.height, -1.0);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            if (depth.at(u, v) < 0) continue;
            double sum = 0.0;
            int cnt = 0;
            for (int dv = -blur_radius; dv <= blur_radius; ++dv) {
                for (int du = -blur_radius; du <= blur_radius; ++du) {
                    const int uu = u + du, vv = v + dv;
                    if (uu < 0 || uu >= depth.width || vv < 0 || vv >= depth.height) continue;
                    const double d = depth.at(uu, vv);
                    if (d < 0) continue;  // holes and background don't dilute the average
                    sum += d;
                    ++cnt;
                }
            }
            out.at(u, v) = a * (sum / cnt) + b;
        }
    }
    return out;
}

PointCloud crop_furthest(const PointCloud& pc, const Vec3& viewpoint, size_t n) {
    if (n > pc.size()) throw std::invalid_argument("crop_furthest: n exceeds the cloud size");

    std::vector<size_t> order(pc.size());
    std::iota(order.begin(), order.end(), size_t{0});
    // most removable first: larger distance, then later input position
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
        const double di = (pc.points[i] - viewpoint).squared_norm();
        const double dj = (pc.points[j] - viewpoint).squared_norm();
        if (di != dj) return di > dj;
        return i > j;
    });

    std::vector<uint8_t> dropped(pc.size(), 0);
    for (size_t i = 0; i < n; ++i) dropped[order[i]] = 1;

    PointCloud out;
    out.frame = pc.frame;
    out.points.reserve(pc.size() - n);
    for (size_t i = 0; i < pc.size(); ++i)
        if (!dropped[i]) out.points.push_back(pc.points[i]);
    return out;
}

std::vector<CameraView> make_camera_ring(const Aabb& object_bounds, int n_views, int image_size,
                                         Rng& rng) {
    if (n_views < 1) throw std::invalid_argument("make_camera_ring: need at least one view");
    if (image_size < 8) throw std::invalid_argument("make_camera_ring: image_size too small");

    const double pi = 3.14159265358979323846;
    const Vec3 c = object_bounds.center();
    const double radius = 2.5 * object_bounds.longest_edge();

    std::vector<CameraView> cams;
    cams.reserve(static_cast<size_t>(n_views));
    for (int k = 0; k < n_views; ++k) {
        const double az =
            2 * pi * k / n_views + rng.uniform(-0.3, 0.3) * (pi / n_views);
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double el = sign * rng.uniform(8.0, 25.0) * pi / 180.0;
        const Vec3 eye =
            c + radius * Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                              std::sin(el)};

        CameraView cam;
        cam.width = cam.height = image_size;
        // largest focal length that keeps the worst-case bbox corner
        // (table-like, half-diagonal ~0.78 * extent) inside the frame
        cam.fx = cam.fy = 1.05 * image_size;
        cam.cx = cam.cy = 0.5 * image_size;
        cam.cam_to_world = look_at(eye, c, {0, 0, 1});
        cams.push_back(cam);
    }
    return cams;
}

PointCloud subsample_cloud(const PointCloud& pc, size_t n, Rng& rng) {
    if (pc.size() <= n) return pc;

    std::vector<size_t> idx(pc.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i < n; ++i) {  // partial Fisher-Yates, n draws
        const size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    PointCloud out;
    out.frame = pc.frame;
    out.points.reserve(n);
    for (const size_t i : idx) out.points.push_back(pc.points[i]);
    return out;
}

void DatasetParams::validate() const {
    if (n_objects < 1) throw std::invalid_argument("DatasetParams: n_objects must be >= 1");
    if (views_per_object < 8)
        throw std::invalid_argument("DatasetParams: need at least 8 views per object");
    if (image_size < 8) throw std::invalid_argument("DatasetParams: image_size too small");
    if (grid_n < 2) throw std::invalid_argument("DatasetParams: grid_n must be >= 2");
    if (voxel_size <= 0) throw std::invalid_argument("DatasetParams: voxel_size must be > 0");
    if (dropout_p < 0 || dropout_p > 1)
        throw std::invalid_argument("DatasetParams: dropout_p outside [0,1]");
    if (points_per_cloud < 1)
        throw std::invalid_argument("DatasetParams: points_per_cloud must be >= 1");
    if (second_view_ratio < 0)
        throw std::invalid_argument("DatasetParams: second_view_ratio must be >= 0");
}

namespace {

const std::vector<Category>& default_categories() {
    static const std::vector<Category> cats{Category::ChairLike, Category::TableLike,
                                           Category::LampLike};
    return cats;
}

std::string object_id(int o) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "obj_%03d", o);
    return buf;
}

// Draws camera rings until every view has an eligible second view under the
// 30% union-growth rule; each attempt uses fresh rng streams so the loop
// cannot repeat itself.
ObjectRecord generate_object(const DatasetParams& p, const Rng& root, int o) {
    const std::vector<Category>& cats =
        p.categories.empty() ? default_categories() : p.categories;

    ObjectRecord rec;
    rec.id = object_id(o);
    rec.category = cats[static_cast<size_t>(o) % cats.size()];

    Rng scene_rng = root.stream("scene", static_cast<uint64_t>(o));
    const Scene scene = make_scene(rec.category, scene_rng);
    const double sigma = p.effective_sigma();
    const int K = p.views_per_object;
    const uint64_t max_attempts = 64;

    for (uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
        const uint64_t ring_key = static_cast<uint64_t>(o) * max_attempts + attempt;
        Rng ring_rng = root.stream("ring", ring_key);
        const std::vector<CameraView> cams =
            make_camera_ring(scene.bounds(), K, p.image_size, ring_rng);

        std::vector<Observation> views;
        views.reserve(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            Rng view_rng = root.stream("view", ring_key * static_cast<uint64_t>(K) +
                                                   static_cast<uint64_t>(k));
            Observation ob = render_observation(scene, cams[k], sigma, p.dropout_p, view_rng);
            ob.cloud = subsample_cloud(ob.cloud, static_cast<size_t>(p.points_per_cloud),
                                       view_rng);
            views.push_back(std::move(ob));
        }

        PointCloud uni;
        uni.frame = Frame::World;
        for (const Observation& v : views)
            uni.points.insert(uni.points.end(), v.cloud.points.begin(), v.cloud.points.end());
        if (uni.empty()) continue;

        const Vec3 center = uni.bounds().center();
        const double half = 0.5 * p.grid_n * p.voxel_size;
        GridSpec spec{p.grid_n, p.grid_n, p.grid_n, p.voxel_size,
                      center - Vec3{half, half, half}};

        std::vector<OccupancyGrid> vg;
        vg.reserve(views.size());
        for (const Observation& v : views) vg.push_back(voxelize(v.cloud, spec, 1));

        // a view never qualifies as its own second view (no union growth),
        // so passing the full list keeps indices aligned
        bool ok = true;
        for (int k = 0; k < K && ok; ++k)
            if (eligible_second_views(vg[static_cast<size_t>(k)], vg, p.second_view_ratio)
                    .empty())
                ok = false;
        if (!ok) continue;

        rec.grid = spec;
        rec.gt = voxelize_scene(scene, spec);
        rec.views = std::move(views);
        rec.view_grids = std::move(vg);
        rec.ring_attempt = attempt;
        return rec;
    }
    throw std::runtime_error("generate_dataset: view invariants unsatisfiable for " + rec.id);
}

}  // namespace

std::vector<ObjectRecord> generate_dataset(const DatasetParams& params, uint64_t master_seed,
                                           const std::string& out_dir) {
    params.validate();
    const Rng root(master_seed);
    std::filesystem::create_directories(out_dir);

    std::vector<ObjectRecord> recs;
    recs.reserve(static_cast<size_t>(params.n_objects));
    nlohmann::json objects = nlohmann::json::array();

    for (int o = 0; o < params.n_objects; ++o) {
        ObjectRecord rec = generate_object(params, root, o);

        const std::filesystem::path dir = std::filesystem::path(out_dir) / rec.id;
        std::filesystem::create_directories(dir);
        for (int k = 0; k < params.views_per_object; ++k) {
            const Observation& v = rec.views[static_cast<size_t>(k)];
            const std::string stem = (dir / ("view_" + std::to_string(k))).string();
            write_pfm(stem + ".pfm", v.view.depth);
            write_pgm(stem + ".pgm", v.view.silhouette);
            write_camera_json(stem + ".json", v.view);
            write_ply(stem + ".ply", v.cloud);
        }
        write_grid((dir / "gt").string(), rec.gt, "union-bbox-center");

        objects.push_back({{"id", rec.id},
                           {"category", category_to_string(rec.category)},
                           {"ring_attempt", rec.ring_attempt}});
        recs.push_back(std::move(rec));
    }

    const nlohmann::json manifest = {
        {"master_seed", master_seed},
        {"n_objects", params.n_objects},
        {"views_per_object", params.views_per_object},
        {"image_size", params.image_size},
        {"grid_n", params.grid_n},
        {"voxel_size", params.voxel_size},
        {"noise_sigma", params.effective_sigma()},
        {"dropout_p", params.dropout_p},
        {"points_per_cloud", params.points_per_cloud},
        {"second_view_ratio", params.second_view_ratio},
        {"objects", objects},
    };
    const std::string mpath = (std::filesystem::path(out_dir) / "manifest.json").string();
    std::ofstream f(mpath);
    if (!f) throw std::runtime_error("cannot open for write: " + mpath);
    f << manifest.dump(2) << "\n";
    if (!f) throw std::runtime_error("write failed: " + mpath);

    return recs;
}

std::vector<ObjectRecord> load_dataset(const std::string& dir) {
    const std::string mpath = (std::filesystem::path(dir) / "manifest.json").string();
    std::ifstream f(mpath);
    if (!f) throw std::runtime_error("cannot open: " + mpath);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(mpath + ": " + e.what());
    }

    try {
        const int K = m.at("views_per_object").get<int>();
        const double sigma = m.at("noise_sigma").get<double>();
        const double dropout = m.at("dropout_p").get<double>();

        std::vector<ObjectRecord> recs;
        for (const nlohmann::json& obj : m.at("objects")) {
            ObjectRecord rec;
            rec.id = obj.at("id").get<std::string>();
            rec.category = category_from_string(obj.at("category").get<std::string>());
            rec.ring_attempt = obj.value("ring_attempt", uint64_t{0});

            const std::filesystem::path odir = std::filesystem::path(dir) / rec.id;
            rec.gt = read_grid((odir / "gt").string());
            rec.grid = rec.gt.spec;

            for (int k = 0; k < K; ++k) {
                const std::string stem = (odir / ("view_" + std::to_string(k))).string();
                Observation ob;
                ob.view = read_camera_json(stem + ".json");
                ob.view.depth = read_pfm(stem + ".pfm");
                ob.view.silhouette = read_pgm(stem + ".pgm");
                if (ob.view.depth.width != ob.view.width ||
                    ob.view.depth.height != ob.view.height ||
                    !ob.view.depth.same_size(ob.view.silhouette))
                    throw std::runtime_error(stem + ": image sizes disagree with the camera");
                ob.cloud = read_ply(stem + ".ply");
                ob.noise_sigma = sigma;
                ob.dropout_p = dropout;
                rec.view_grids.push_back(voxelize(ob.cloud, rec.grid, 1));
                rec.views.push_back(std::move(ob));
            }
            recs.push_back(std::move(rec));
        }
        return recs;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(mpath + ": " + e.what());
    }
}

}  // namespace realdiff
