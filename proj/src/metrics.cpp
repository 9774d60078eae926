#include "realdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "realdiff/rng.hpp"
#include "realdiff/synth.hpp"

namespace realdiff {

namespace {

double sq_dist(const Vec3& a, const Vec3& b) {
    const Vec3 d = a - b;
    return d.dot(d);
}

// squared distance to the nearest point of cloud
double nn_sq(const Vec3& p, const PointCloud& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : cloud.points) best = std::min(best, sq_dist(p, q));
    return best;
}

// per-point NN computed in parallel, reduced serially for determinism
std::vector<double> nn_sq_all(const PointCloud& from, const PointCloud& to) {
    std::vector<double> out(from.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(from.size()); ++i)
        out[static_cast<size_t>(i)] = nn_sq(from.points[static_cast<size_t>(i)], to);
    return out;
}

// O(n^3) shortest-augmenting-path assignment; returns total cost of the
// optimal bijection for the dense cost matrix (row-major, n x n).
double assignment_cost(const std::vector<double>& cost, size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<size_t> match(n + 1, 0), way(n + 1, 0);  // match[j]: row on column j
    for (size_t i = 1; i <= n; ++i) {
        match[0] = i;
        size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const size_t i0 = match[j0];
            size_t j1 = 0;
            double delta = inf;
            for (size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        while (j0 != 0) {
            const size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        }
    }
    double total = 0.0;
    for (size_t j = 1; j <= n; ++j)
        if (match[j] != 0) total += cost[(match[j] - 1) * n + (j - 1)];
    return total;
}

}  // namespace

EvalFrame eval_frame(const PointCloud& reference) {
    if (reference.empty()) throw std::invalid_argument("eval_frame: empty reference cloud");
    const double edge = reference.bounds().longest_edge();
    if (!(edge > 0.0))
        throw std::invalid_argument("eval_frame: reference cloud has zero extent");
    return EvalFrame{reference.centroid(), edge};
}

PointCloud to_frame(const PointCloud& pc, const EvalFrame& frame) {
    if (!(frame.scale > 0.0)) throw std::invalid_argument("to_frame: scale must be > 0");
    PointCloud out;
    out.frame = pc.frame;
    out.points.reserve(pc.size());
    for (const Vec3& p : pc.points) out.points.push_back((p - frame.anchor) / frame.scale);
    return out;
}

Prf1 precision_recall_f1(const PointCloud& pred, const PointCloud& gt, double tau) {
    if (pred.empty() || gt.empty())
        throw std::invalid_argument("precision_recall_f1: empty cloud");
    if (!(tau > 0.0)) throw std::invalid_argument("precision_recall_f1: tau must be > 0");
    const double tau_sq = tau * tau;

    auto hit_fraction = [&](const PointCloud& from, const PointCloud& to) {
        std::vector<char> hit(from.size(), 0);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(from.size()); ++i) {
            const Vec3& p = from.points[static_cast<size_t>(i)];
            for (const Vec3& q : to.points) {
                if (sq_dist(p, q) <= tau_sq) {
                    hit[static_cast<size_t>(i)] = 1;
                    break;
                }
            }
        }
        size_t n = 0;
        for (const char h : hit) n += static_cast<size_t>(h);
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

double emd(const PointCloud& a, const PointCloud& b, size_t max_exact, uint64_t seed) {
    if (a.size() != b.size()) throw std::invalid_argument("emd: cloud sizes differ");
    if (a.empty()) throw std::invalid_argument("emd: empty cloud");
    if (max_exact < 1) throw std::invalid_argument("emd: max_exact must be >= 1");

    const PointCloud* pa = &a;
    const PointCloud* pb = &b;
    PointCloud sa, sb;
    if (a.size() > max_exact) {
        Rng root(seed);
        Rng ra = root.stream("emd-a");
        Rng rb = root.stream("emd-b");
        sa = subsample_cloud(a, max_exact, ra);
        sb = subsample_cloud(b, max_exact, rb);
        pa = &sa;
        pb = &sb;
    }
    const size_t n = pa->size();
    std::vector<double> cost(n * n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i)
        for (size_t j = 0; j < n; ++j)
            cost[static_cast<size_t>(i) * n + j] =
                std::sqrt(sq_dist(pa->points[static_cast<size_t>(i)], pb->points[j]));

    return assignment_cost(cost, n) / static_cast<double>(n) * 100.0;
}

double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty cloud");
    const std::vector<double> ab = nn_sq_all(a, b);
    const std::vector<double> ba = nn_sq_all(b, a);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const double d : ab) sum_ab += d;
    for (const double d : ba) sum_ba += d;
    return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

double uhd(const PointCloud& partial, const std::vector<PointCloud>& completions) {
    if (completions.empty()) throw std::invalid_argument("uhd: no completions");
    if (partial.empty()) throw std::invalid_argument("uhd: empty partial cloud");
    double acc = 0.0;
    for (const PointCloud& c : completions) {
        if (c.empty()) throw std::invalid_argument("uhd: empty completion");
        const std::vector<double> d = nn_sq_all(partial, c);
        double worst = 0.0;
        for (const double s : d) worst = std::max(worst, s);
        acc += std::sqrt(worst);
    }
    return acc / static_cast<double>(completions.size());
}

double mmd(const std::vector<PointCloud>& gt_set, const std::vector<PointCloud>& generated,
           double tau) {
    if (gt_set.empty() || generated.empty())
        throw std::invalid_argument("mmd: empty shape set");
    double acc = 0.0;
    for (const PointCloud& s : gt_set) {
        double best = -1.0;
        for (const PointCloud& g : generated) {
            const double f1 = precision_recall_f1(g, s, tau).f1;
            if (f1 > best) best = f1;  // strict: ties keep the lowest index
        }
        acc += best;
    }
    return acc / static_cast<double>(gt_set.size());
}

double tmd(const std::vector<PointCloud>& completions) {
    const size_t k = completions.size();
    if (k < 2) throw std::invalid_argument("tmd: need at least 2 completions");
    std::vector<double> cd(k * k, 0.0);
    for (size_t j = 0; j < k; ++j)
        for (size_t l = j + 1; l < k; ++l)
            cd[j * k + l] = cd[l * k + j] = chamfer(completions[j], completions[l]);
    double total = 0.0;
    for (size_t j = 0; j < k; ++j) {
        double inner = 0.0;
        for (size_t l = 0; l < k; ++l)
            if (l != j) inner += cd[j * k + l];
        total += inner / static_cast<double>(k - 1);
    }
    return total;
}

}  // namespace realdiff
