#include "realdiff/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "realdiff/denoiser.hpp"
#include "realdiff/tensor.hpp"

namespace realdiff::reference {

namespace {

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double sq_dist(const Vec3& a, const Vec3& b) {
    const Vec3 d = a - b;
    return d.dot(d);
}

double nn_sq(const Vec3& p, const PointCloud& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : cloud.points) best = std::min(best, sq_dist(p, q));
    return best;
}

// same tap order as the production conv: ci outer, dz/dy/dx inner
void conv_forward(const DenseTensor& in, const ConvLayer& layer, int nx, int ny, int nz,
                  DenseTensor& out) {
    const long nvox = static_cast<long>(nx) * ny * nz;
    const double* src = in.data.data();
    double* dst = out.data.data();
    for (int co = 0; co < layer.c_out; ++co) {
        for (int iz = 0; iz < nz; ++iz) {
            for (int iy = 0; iy < ny; ++iy) {
                for (int ix = 0; ix < nx; ++ix) {
                    double sum = layer.b[co];
                    for (int ci = 0; ci < layer.c_in; ++ci) {
                        const double* w =
                            &layer.w[(static_cast<size_t>(co) * layer.c_in + ci) * 27];
                        const double* chan = src + static_cast<size_t>(ci) * nvox;
                        for (int dz = -1; dz <= 1; ++dz) {
                            const int z = iz + dz;
                            if (z < 0 || z >= nz) continue;
                            for (int dy = -1; dy <= 1; ++dy) {
                                const int y = iy + dy;
                                if (y < 0 || y >= ny) continue;
                                for (int dx = -1; dx <= 1; ++dx) {
                                    const int x = ix + dx;
                                    if (x < 0 || x >= nx) continue;
                                    sum += w[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))] *
                                           chan[x + nx * (y + static_cast<long>(ny) * z)];
                                }
                            }
                        }
                    }
                    dst[static_cast<size_t>(co) * nvox + ix +
                        nx * (iy + static_cast<long>(ny) * iz)] = sum;
                }
            }
        }
    }
}

}  // namespace

OccupancyGrid voxelize(const PointCloud& pc, const GridSpec& spec, int threshold_k) {
    spec.validate();
    if (threshold_k < 1) throw std::invalid_argument("voxelize: K must be >= 1");
    if (pc.frame != Frame::World)
        throw std::invalid_argument("voxelize: cloud must be in world frame");

    std::vector<int> counts(spec.cell_count(), 0);
    const double inv = 1.0 / spec.voxel_size;
    for (const Vec3& p : pc.points) {
        if (!p.finite()) throw std::invalid_argument("voxelize: non-finite point coordinate");
        const int ix = static_cast<int>(std::floor((p.x - spec.origin.x) * inv));
        const int iy = static_cast<int>(std::floor((p.y - spec.origin.y) * inv));
        const int iz = static_cast<int>(std::floor((p.z - spec.origin.z) * inv));
        if (!spec.contains(ix, iy, iz)) continue;
        ++counts[spec.index(ix, iy, iz)];
    }

    OccupancyGrid grid(spec);
    for (size_t c = 0; c < counts.size(); ++c)
        grid.values[c] = counts[c] >= threshold_k ? 1.0 : 0.0;
    return grid;
}

OccupancyGrid q_sample(const OccupancyGrid& x0, const ConditionMask& mask, int t,
                       const std::vector<double>& noise, const VarianceSchedule& sched) {
    if (t < 1 || t > sched.T) throw std::invalid_argument("q_sample: t outside [1,T]");
    if (!(x0.spec == mask.spec)) throw std::invalid_argument("q_sample: spec mismatch");
    if (noise.size() != x0.values.size())
        throw std::invalid_argument("q_sample: noise field has wrong size");

    const double s_ab = std::sqrt(sched.alpha_bar(t));
    const double s_1mab = std::sqrt(1.0 - sched.alpha_bar(t));

    OccupancyGrid out = x0;
    out.noised = true;
    for (size_t i = 0; i < out.values.size(); ++i) {
        if (mask.bits[i]) continue;
        out.values[i] = s_ab * x0.values[i] + s_1mab * noise[i];
    }
    return out;
}

OccupancyGrid tiny_predict(const TinyDenoiserParams& params, const OccupancyGrid& x_t,
                           const ConditionMask& mask, int t) {
    if (!(x_t.spec == mask.spec)) throw std::invalid_argument("tiny_predict: spec mismatch");
    if (params.layers.size() != 3) throw std::invalid_argument("tiny_predict: expected 3 layers");
    if (params.layers[0].c_in != 2 + params.embed_dim)
        throw std::invalid_argument("tiny_predict: input channel count mismatch");

    const int nx = x_t.spec.nx, ny = x_t.spec.ny, nz = x_t.spec.nz;
    const long nvox = static_cast<long>(x_t.spec.cell_count());
    const int in_c = 2 + params.embed_dim;

    DenseTensor input({in_c, nz, ny, nx});
    std::copy(x_t.values.begin(), x_t.values.end(), input.data.begin());
    for (long i = 0; i < nvox; ++i) input.data[nvox + i] = mask.bits[i] ? 1.0 : 0.0;
    const std::vector<double> emb = time_embedding(t, params.embed_dim, params.T);
    for (int e = 0; e < params.embed_dim; ++e)
        std::fill_n(input.data.begin() + static_cast<size_t>(2 + e) * nvox, nvox, emb[e]);

    DenseTensor a1({params.layers[0].c_out, nz, ny, nx});
    conv_forward(input, params.layers[0], nx, ny, nz, a1);
    for (double& v : a1.data) v = v > 0.0 ? v : 0.0;

    DenseTensor a2({params.layers[1].c_out, nz, ny, nx});
    conv_forward(a1, params.layers[1], nx, ny, nz, a2);
    for (double& v : a2.data) v = v > 0.0 ? v : 0.0;

    DenseTensor z3({params.layers[2].c_out, nz, ny, nx});
    conv_forward(a2, params.layers[2], nx, ny, nz, z3);

    OccupancyGrid out(x_t.spec);
    for (long i = 0; i < nvox; ++i) out.values[i] = logistic(z3.data[i]);
    return out;
}

RenderedView render_view(const OccupancyGrid& grid, const CameraView& cam, int M,
                         RenderMode mode) {
    cam.validate();
    grid.spec.validate();
    if (M < 2) throw std::invalid_argument("render_view: M must be >= 2");

    RenderedView out;
    out.silhouette = Image(cam.width, cam.height);
    out.depth = Image(cam.width, cam.height);
    out.weight = Image(cam.width, cam.height);

    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Ray ray = pixel_ray(cam, u, v);
            double t0, t1;
            if (!grid.spec.bounds().intersect_ray(ray.origin, ray.dir, t0, t1)) continue;
            if (!(t1 - t0 > 1e-12)) continue;
            const RaySamples rs = make_ray_samples(ray, t0, t1, M);
            double T = 1.0, S = 0.0, D = 0.0;
            for (int i = 0; i < M; ++i) {
                const double t = rs.t_vals[i];
                const double o = trilinear(grid, rs.origin + rs.dir * t);
                S += T * o;
                D += T * o * t;
                T *= mode == RenderMode::Paper ? std::exp(-o * rs.deltas[i]) : 1.0 - o;
            }
            out.silhouette.at(u, v) = S;
            out.depth.at(u, v) = D;
            out.weight.at(u, v) = S;
        }
    }
    return out;
}

Prf1 precision_recall_f1(const PointCloud& pred, const PointCloud& gt, double tau) {
    if (pred.empty() || gt.empty())
        throw std::invalid_argument("precision_recall_f1: empty cloud");
    if (!(tau > 0.0)) throw std::invalid_argument("precision_recall_f1: tau must be > 0");
    const double tau_sq = tau * tau;

    const auto hit_fraction = [&](const PointCloud& from, const PointCloud& to) {
        size_t n = 0;
        for (const Vec3& p : from.points) {
            for (const Vec3& q : to.points) {
                if (sq_dist(p, q) <= tau_sq) {
                    ++n;
                    break;
                }
            }
        }
        return static_cast<double>(n) / static_cast<double>(from.size());
    };

    Prf1 r;
    r.precision = hit_fraction(pred, gt);
    r.recall = hit_fraction(gt, pred);
    r.f1 = (r.precision + r.recall > 0.0)
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty cloud");
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const Vec3& p : a.points) sum_ab += nn_sq(p, b);
    for (const Vec3& p : b.points) sum_ba += nn_sq(p, a);
    return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

}  // namespace realdiff::reference
