#pragma once

#include <vector>

#include "realdiff/grid.hpp"
#include "realdiff/metrics.hpp"
#include "realdiff/render.hpp"
#include "realdiff/schedule.hpp"
#include "realdiff/tiny_denoiser.hpp"

// Single-threaded twins of the OpenMP kernels. Each one repeats the
// per-element arithmetic of its production counterpart in the same order,
// so outputs must match bit for bit on any thread count; the kernel tests
// and realdiff_bench hold the pair to that.
namespace realdiff::reference {

OccupancyGrid voxelize(const PointCloud& pc, const GridSpec& spec, int threshold_k);

OccupancyGrid q_sample(const OccupancyGrid& x0, const ConditionMask& mask, int t,
                       const std::vector<double>& noise, const VarianceSchedule& sched);

OccupancyGrid tiny_predict(const TinyDenoiserParams& params, const OccupancyGrid& x_t,
                           const ConditionMask& mask, int t);

RenderedView render_view(const OccupancyGrid& grid, const CameraView& cam, int M,
                         RenderMode mode);

Prf1 precision_recall_f1(const PointCloud& pred, const PointCloud& gt, double tau);

double chamfer(const PointCloud& a, const PointCloud& b);

}  // namespace realdiff::reference
