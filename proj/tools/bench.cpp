// Times the OpenMP kernels against their serial reference twins and checks
// the outputs still agree bit for bit at benchmark sizes.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "realdiff/camera.hpp"
#include "realdiff/diffusion.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/metrics.hpp"
#include "realdiff/reference.hpp"
#include "realdiff/render.hpp"
#include "realdiff/rng.hpp"
#include "realdiff/schedule.hpp"
#include "realdiff/synth.hpp"
#include "realdiff/tiny_denoiser.hpp"

using namespace realdiff;

namespace {

template <typename F>
double best_ms(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double par_ms, double ref_ms, bool equal) {
    std::printf("%-16s %10.2f %10.2f %9.2fx   %s\n", name, par_ms, ref_ms, ref_ms / par_ms,
                equal ? "bit-identical" : "MISMATCH");
}

PointCloud random_cloud(size_t n, Rng& rng) {
    PointCloud pc;
    pc.frame = Frame::World;
    for (size_t i = 0; i < n; ++i)
        pc.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    return pc;
}

}  // namespace

int main(int argc, char** argv) {
    int grid_n = 16, image = 64, samples = 64, reps = 3;
    size_t points = 100000, cloud = 2048;
    uint64_t seed = 0;

    CLI::App app{"kernel timings: OpenMP vs serial reference"};
    app.add_option("--grid", grid_n, "voxel grid edge length (default 16)");
    app.add_option("--image", image, "render image edge length (default 64)");
    app.add_option("--samples", samples, "ray samples per pixel (default 64)");
    app.add_option("--points", points, "points fed to voxelize (default 100000)");
    app.add_option("--cloud", cloud, "cloud size for the metric kernels (default 2048)");
    app.add_option("--reps", reps, "repetitions, best time kept (default 3)");
    app.add_option("--seed", seed, "input seed");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("%-16s %10s %10s %10s\n", "kernel", "omp ms", "serial ms", "speedup");

    Rng rng(seed);
    GridSpec spec;
    spec.nx = spec.ny = spec.nz = grid_n;
    spec.voxel_size = 1.0 / grid_n;
    spec.origin = {-0.5, -0.5, -0.5};

    {
        const PointCloud pc = random_cloud(points, rng);
        OccupancyGrid a, b;
        const double par = best_ms(reps, [&] { a = voxelize(pc, spec, 2); });
        const double ref = best_ms(reps, [&] { b = reference::voxelize(pc, spec, 2); });
        report("voxelize", par, ref, a.values == b.values);
    }

    OccupancyGrid x0(spec);
    for (double& v : x0.values) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
    const ConditionMask mask = condition_split(x0);
    {
        const VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
        std::vector<double> noise(spec.cell_count());
        for (double& z : noise) z = rng.normal();
        OccupancyGrid a, b;
        const double par = best_ms(reps, [&] { a = q_sample(x0, mask, 25, noise, sched); });
        const double ref =
            best_ms(reps, [&] { b = reference::q_sample(x0, mask, 25, noise, sched); });
        report("q_sample", par, ref, a.values == b.values);
    }

    {
        const TinyDenoiserParams params = make_tiny_params(8, 8, 50, seed);
        OccupancyGrid x_t(spec);
        x_t.noised = true;
        for (double& v : x_t.values) v = rng.normal();
        OccupancyGrid a, b;
        const double par = best_ms(reps, [&] { a = tiny_predict(params, x_t, mask, 25); });
        const double ref =
            best_ms(reps, [&] { b = reference::tiny_predict(params, x_t, mask, 25); });
        report("tiny_predict", par, ref, a.values == b.values);
    }

    {
        Rng ring = rng.stream("ring");
        const CameraView cam = make_camera_ring(spec.bounds(), 1, image, ring).front();
        RenderedView a, b;
        const double par = best_ms(
            reps, [&] { a = render_view(x0, cam, samples, RenderMode::Compositing); });
        const double ref = best_ms(reps, [&] {
            b = reference::render_view(x0, cam, samples, RenderMode::Compositing);
        });
        report("render_view", par, ref,
               a.silhouette.data == b.silhouette.data && a.depth.data == b.depth.data);
    }

    const PointCloud ca = random_cloud(cloud, rng);
    const PointCloud cb = random_cloud(cloud, rng);
    {
        Prf1 a, b;
        const double par = best_ms(reps, [&] { a = precision_recall_f1(ca, cb, 1e-2); });
        const double ref =
            best_ms(reps, [&] { b = reference::precision_recall_f1(ca, cb, 1e-2); });
        report("prf1", par, ref,
               a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1);
    }

    {
        double a = 0, b = 0;
        const double par = best_ms(reps, [&] { a = chamfer(ca, cb); });
        const double ref = best_ms(reps, [&] { b = reference::chamfer(ca, cb); });
        report("chamfer", par, ref, a == b);
    }

    return 0;
}
