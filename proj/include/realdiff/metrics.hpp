#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "realdiff/point_cloud.hpp"

namespace realdiff {

// Shared evaluation frame: translate by the reference cloud's centroid and
// divide by its bounding-box longest edge, so distance thresholds are
// dimensionless fractions of object size.
struct EvalFrame {
    Vec3 anchor;
    double scale = 1.0;
};
EvalFrame eval_frame(const PointCloud& reference);
PointCloud to_frame(const PointCloud& pc, const EvalFrame& frame);

struct Prf1 {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};
// precision: fraction of pred within tau of some gt point; recall symmetric;
// f1 harmonic mean, 0 when precision + recall == 0.
Prf1 precision_recall_f1(const PointCloud& pred, const PointCloud& gt, double tau);

// Exact minimum-cost bijection (O(n^3) assignment on Euclidean distances),
// reported as mean per-point distance x100. Sizes must match; clouds larger
// than max_exact are subsampled to max_exact (seeded, index-uniform).
double emd(const PointCloud& a, const PointCloud& b, size_t max_exact = 512,
           uint64_t seed = 0);

// mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2
double chamfer(const PointCloud& a, const PointCloud& b);

// mean over completions of the one-sided Hausdorff distance from partial:
// (1/k) sum_j max_p min_c |p - c|
double uhd(const PointCloud& partial, const std::vector<PointCloud>& completions);

// For each gt shape, the best (highest-F1) match among generated; ties keep
// the lowest generated index. Returns the mean matched F1.
double mmd(const std::vector<PointCloud>& gt_set, const std::vector<PointCloud>& generated,
           double tau);

// Diversity across k >= 2 completions of one input:
// sum_j (1/(k-1)) sum_{l != j} chamfer(c_j, c_l)
double tmd(const std::vector<PointCloud>& completions);

// One evaluated object; absent metrics stay unset (e.g. tmd for k < 2).
struct MetricReport {
    std::optional<double> precision, recall, f1, emd, chamfer, uhd, mmd, tmd;
    double tau = 1e-2;
    size_t emd_max_exact = 512;
    uint64_t seed = 0;
};

}  // namespace realdiff
