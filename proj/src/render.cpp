#include "realdiff/render.hpp"

#include <cmath>
#include <stdexcept>

namespace realdiff {

RaySamples make_ray_samples(const Ray& ray, double near, double far, int M) {
    if (!(near < far)) throw std::invalid_argument("make_ray_samples: near must be < far");
    if (M < 2) throw std::invalid_argument("make_ray_samples: M must be >= 2");
    if (std::abs(ray.dir.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("make_ray_samples: direction must be unit length");

    RaySamples rs;
    rs.origin = ray.origin;
    rs.dir = ray.dir;
    const double step = (far - near) / M;
    rs.t_vals.resize(M);
    rs.deltas.assign(M, step);
    for (int i = 0; i < M; ++i) rs.t_vals[i] = near + (i + 0.5) * step;
    return rs;
}

TrilinearTaps trilinear_taps(const GridSpec& spec, const Vec3& p) {
    // continuous lattice coordinates: voxel center i sits at coordinate i
    const double gx = (p.x - spec.origin.x) / spec.voxel_size - 0.5;
    const double gy = (p.y - spec.origin.y) / spec.voxel_size - 0.5;
    const double gz = (p.z - spec.origin.z) / spec.voxel_size - 0.5;
    const int ix = static_cast<int>(std::floor(gx));
    const int iy = static_cast<int>(std::floor(gy));
    const int iz = static_cast<int>(std::floor(gz));
    const double fx = gx - ix, fy = gy - iy, fz = gz - iz;

    TrilinearTaps taps;
    for (int c = 0; c < 8; ++c) {
        const int ax = c & 1, ay = (c >> 1) & 1, az = (c >> 2) & 1;
        const int jx = ix + ax, jy = iy + ay, jz = iz + az;
        if (!spec.contains(jx, jy, jz)) continue;  // zero padding beyond the hull
        const double w = (ax ? fx : 1.0 - fx) * (ay ? fy : 1.0 - fy) * (az ? fz : 1.0 - fz);
        taps.idx[taps.n] = spec.index(jx, jy, jz);
        taps.w[taps.n] = w;
        ++taps.n;
    }
    return taps;
}

double trilinear(const OccupancyGrid& grid, const Vec3& p) {
    TrilinearTaps taps = trilinear_taps(grid.spec, p);
    double v = 0.0;
    for (int k = 0; k < taps.n; ++k) v += taps.w[k] * grid.values[taps.idx[k]];
    return v;
}

namespace {

struct PixelMarch {
    bool hit = false;
    RaySamples rs;
};

PixelMarch march_setup(const GridSpec& spec, const CameraView& cam, int u, int v, int M) {
    PixelMarch pm;
    Ray ray = pixel_ray(cam, u, v);
    double t0, t1;
    if (!spec.bounds().intersect_ray(ray.origin, ray.dir, t0, t1)) return pm;
    if (!(t1 - t0 > 1e-12)) return pm;  // grazing contact
    pm.hit = true;
    pm.rs = make_ray_samples(ray, t0, t1, M);
    return pm;
}

}  // namespace

RenderedView render_view(const OccupancyGrid& grid, const CameraView& cam, int M,
                         RenderMode mode) {
    cam.validate();
    grid.spec.validate();
    if (M < 2) throw std::invalid_argument("render_view: M must be >= 2");

    RenderedView out;
    out.silhouette = Image(cam.width, cam.height);
    out.depth = Image(cam.width, cam.height);
    out.weight = Image(cam.width, cam.height);

#pragma omp parallel for schedule(static)
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            PixelMarch pm = march_setup(grid.spec, cam, u, v, M);
            if (!pm.hit) continue;
            double T = 1.0, S = 0.0, D = 0.0;
            for (int i = 0; i < M; ++i) {
                const double t = pm.rs.t_vals[i];
                const double o = trilinear(grid, pm.rs.origin + pm.rs.dir * t);
                S += T * o;
                D += T * o * t;
                T *= mode == RenderMode::Paper ? std::exp(-o * pm.rs.deltas[i]) : 1.0 - o;
            }
            out.silhouette.at(u, v) = S;
            out.depth.at(u, v) = D;
            out.weight.at(u, v) = S;
        }
    }
    return out;
}

Image render_silhouette(const OccupancyGrid& grid, const CameraView& cam, int M,
                        RenderMode mode) {
    return render_view(grid, cam, M, mode).silhouette;
}

std::vector<double> render_backward(const OccupancyGrid& grid, const CameraView& cam, int M,
                                    RenderMode mode, const Image& dL_dS, const Image& dL_dD) {
    cam.validate();
    const bool use_s = dL_dS.pixel_count() > 0;
    const bool use_d = dL_dD.pixel_count() > 0;
    if (use_s && (dL_dS.width != cam.width || dL_dS.height != cam.height))
        throw std::invalid_argument("render_backward: dL_dS size mismatch");
    if (use_d && (dL_dD.width != cam.width || dL_dD.height != cam.height))
        throw std::invalid_argument("render_backward: dL_dD size mismatch");

    const int n_pix = cam.width * cam.height;
    // pass 1 (parallel, disjoint writes): per-sample upstream d loss / d o_k
    std::vector<double> sample_grad(static_cast<size_t>(n_pix) * M, 0.0);
    std::vector<uint8_t> active(n_pix, 0);

#pragma omp parallel for schedule(static)
    for (int v = 0; v < cam.height; ++v) {
        std::vector<double> o(M), T(M);
        for (int u = 0; u < cam.width; ++u) {
            const int pix = v * cam.width + u;
            const double gS = use_s ? dL_dS.at(u, v) : 0.0;
            const double gD = use_d ? dL_dD.at(u, v) : 0.0;
            if (gS == 0.0 && gD == 0.0) continue;
            PixelMarch pm = march_setup(grid.spec, cam, u, v, M);
            if (!pm.hit) continue;
            active[pix] = 1;

            double Tcur = 1.0;
            for (int i = 0; i < M; ++i) {
                o[i] = trilinear(grid, pm.rs.origin + pm.rs.dir * pm.rs.t_vals[i]);
                T[i] = Tcur;
                Tcur *= mode == RenderMode::Paper ? std::exp(-o[i] * pm.rs.deltas[i]) : 1.0 - o[i];
            }

            double* g = &sample_grad[static_cast<size_t>(pix) * M];
            if (mode == RenderMode::Compositing) {
                // survival-conditioned future contributions, built back to front
                double G = 0.0, H = 0.0;
                for (int k = M - 1; k >= 0; --k) {
                    const double dS = T[k] * (1.0 - G);
                    const double dD = T[k] * (pm.rs.t_vals[k] - H);
                    g[k] = gS * dS + gD * dD;
                    G = o[k] + (1.0 - o[k]) * G;
                    H = o[k] * pm.rs.t_vals[k] + (1.0 - o[k]) * H;
                }
            } else {
                double P = 0.0, Q = 0.0;  // suffix sums of T o and T o t
                for (int k = M - 1; k >= 0; --k) {
                    const double dS = T[k] - pm.rs.deltas[k] * P;
                    const double dD = T[k] * pm.rs.t_vals[k] - pm.rs.deltas[k] * Q;
                    g[k] = gS * dS + gD * dD;
                    P += T[k] * o[k];
                    Q += T[k] * o[k] * pm.rs.t_vals[k];
                }
            }
        }
    }

    // pass 2 (serial, fixed pixel order): scatter through the interpolation
    // weights so accumulation order never depends on threading
    std::vector<double> grad(grid.values.size(), 0.0);
    for (int pix = 0; pix < n_pix; ++pix) {
        if (!active[pix]) continue;
        const int u = pix % cam.width, v = pix / cam.width;
        PixelMarch pm = march_setup(grid.spec, cam, u, v, M);
        const double* g = &sample_grad[static_cast<size_t>(pix) * M];
        for (int k = 0; k < M; ++k) {
            if (g[k] == 0.0) continue;
            TrilinearTaps taps =
                trilinear_taps(grid.spec, pm.rs.origin + pm.rs.dir * pm.rs.t_vals[k]);
            for (int c = 0; c < taps.n; ++c) grad[taps.idx[c]] += g[k] * taps.w[c];
        }
    }
    return grad;
}

SilhouetteLoss silhouette_loss(const std::vector<Image>& rendered,
                               const std::vector<Image>& measured) {
    if (rendered.empty() || rendered.size() != measured.size())
        throw std::invalid_argument("silhouette_loss: need matching non-empty view lists");
    const double V = static_cast<double>(rendered.size());

    SilhouetteLoss out;
    for (size_t j = 0; j < rendered.size(); ++j) {
        if (!rendered[j].same_size(measured[j]))
            throw std::invalid_argument("silhouette_loss: image size mismatch");
        const size_t n = rendered[j].pixel_count();
        Image g(rendered[j].width, rendered[j].height);
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double diff = rendered[j].data[i] - measured[j].data[i];
            acc += std::abs(diff);
            g.data[i] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / (V * n);
        }
        out.loss += acc / (V * n);
        out.grads.push_back(std::move(g));
    }
    return out;
}

DepthAlignment depth_align(const Image& d_hat, const Image& d,
                           const std::vector<uint8_t>& valid) {
    if (!d_hat.same_size(d) || valid.size() != d_hat.pixel_count())
        throw std::invalid_argument("depth_align: size mismatch");

    DepthAlignment al;
    double A = 0, B = 0, C = 0, E = 0;
    for (size_t i = 0; i < valid.size(); ++i) {
        if (!valid[i]) continue;
        const double dh = d_hat.data[i], dm = d.data[i];
        A += dh * dh;
        B += dh;
        C += dh * dm;
        E += dm;
        ++al.n_valid;
    }
    const double n = static_cast<double>(al.n_valid);
    const double det = n * A - B * B;
    if (al.n_valid < 2 || det <= 1e-12 * std::max(1.0, n * A)) {
        al.degenerate = true;
        al.w = 0.0;
        al.q = al.n_valid > 0 ? E / n : 0.0;
        return al;
    }
    al.w = (n * C - B * E) / det;
    al.q = (A * E - B * C) / det;
    return al;
}

DepthLoss depth_loss(const std::vector<RenderedView>& rendered,
                     const std::vector<Image>& measured, double w_min) {
    if (rendered.empty() || rendered.size() != measured.size())
        throw std::invalid_argument("depth_loss: need matching non-empty view lists");
    const double V = static_cast<double>(rendered.size());

    DepthLoss out;
    for (size_t j = 0; j < rendered.size(); ++j) {
        const Image& dh = rendered[j].depth;
        const Image& wt = rendered[j].weight;
        const Image& dm = measured[j];
        if (!dh.same_size(dm) || !wt.same_size(dm))
            throw std::invalid_argument("depth_loss: image size mismatch");

        const size_t npix = dm.pixel_count();
        std::vector<uint8_t> valid(npix, 0);
        for (size_t i = 0; i < npix; ++i)
            valid[i] = dm.data[i] >= 0.0 && wt.data[i] >= w_min ? 1 : 0;

        DepthAlignment al = depth_align(dh, dm, valid);
        out.alignments.push_back(al);
        Image g(dm.width, dm.height);

        if (al.n_valid == 0) {
            ++out.skipped_views;
            out.grads.push_back(std::move(g));
            continue;
        }

        const double n = static_cast<double>(al.n_valid);
        double loss_j = 0.0, Sw = 0.0, Sq = 0.0;
        std::vector<double> sign(npix, 0.0);
        for (size_t i = 0; i < npix; ++i) {
            if (!valid[i]) continue;
            const double r = al.w * dh.data[i] + al.q - dm.data[i];
            loss_j += std::abs(r);
            sign[i] = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
            Sw += sign[i] * dh.data[i];
            Sq += sign[i];
        }
        loss_j /= n;
        out.loss += loss_j / V;

        if (!al.degenerate) {
            // the fitted (w,q) are functions of d_hat; chain through the
            // normal equations
            double A = 0, B = 0, C = 0, E = 0;
            for (size_t i = 0; i < npix; ++i) {
                if (!valid[i]) continue;
                A += dh.data[i] * dh.data[i];
                B += dh.data[i];
                C += dh.data[i] * dm.data[i];
                E += dm.data[i];
            }
            const double det = n * A - B * B;
            for (size_t i = 0; i < npix; ++i) {
                if (!valid[i]) continue;
                const double dhi = dh.data[i], dmi = dm.data[i];
                const double ddet = 2.0 * n * dhi - 2.0 * B;
                const double dw = (n * dmi - E - al.w * ddet) / det;
                const double dq = (2.0 * dhi * E - C - B * dmi - al.q * ddet) / det;
                g.data[i] = (sign[i] * al.w + Sw * dw + Sq * dq) / (n * V);
            }
        }
        // degenerate fit pins w to 0 and q to the measured mean, neither
        // depends on d_hat, so the gradient is identically zero
        out.grads.push_back(std::move(g));
    }
    return out;
}

}  // namespace realdiff
