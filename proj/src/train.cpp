#include "realdiff/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace realdiff {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (const double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

OccupancyGrid union_grid(const OccupancyGrid& a, const OccupancyGrid& b) {
    OccupancyGrid out = a;
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = std::max(out.values[i], b.values[i]);
    return out;
}

struct ItemStep {
    double loss = 0.0;
    std::vector<double> param_grad;
};

// One object's contribution for this epoch: pick the view pair, noise the
// pseudo-GT, predict, and push the phase losses back to the parameters.
ItemStep item_step(const TinyDenoiserParams& params, const TrainObject& obj,
                   const TrainConfig& cfg, const VarianceSchedule& sched, int phase,
                   Rng& rng) {
    const size_t n_views = obj.views.size();
    std::vector<OccupancyGrid> grids;
    grids.reserve(n_views);
    for (const TrainView& v : obj.views) grids.push_back(v.grid);

    const size_t input = rng.below(n_views);
    const auto second = select_second_view(grids[input], grids, cfg.second_view_ratio, rng);
    if (!second)
        throw std::runtime_error("train: no eligible second view for object " + obj.id);

    const OccupancyGrid pseudo_gt = union_grid(grids[input], grids[*second]);
    const ConditionMask mask = condition_split(grids[input]);

    const int t = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.T)));
    std::vector<double> noise(pseudo_gt.values.size());
    for (double& z : noise) z = rng.normal();

    const OccupancyGrid x_t = q_sample(pseudo_gt, mask, t, noise, sched);
    ForwardCache cache;
    const OccupancyGrid pred = tiny_predict(params, x_t, mask, t, &cache);
    const BceResult bce = masked_bce_loss(pred, pseudo_gt, mask, phase);

    ItemStep out;
    if (phase == 1) {
        out.loss = bce.loss;
        out.param_grad = tiny_backward(params, cache, bce.grad);
        return out;
    }

    const LossWeights& w = cfg.weights;
    std::vector<double> upstream(bce.grad.size());
    for (size_t i = 0; i < upstream.size(); ++i) upstream[i] = w.lambda1 * bce.grad[i];

    const size_t view_idx[2] = {input, *second};
    std::vector<RenderedView> rendered;
    std::vector<Image> measured_sil, measured_depth;
    for (const size_t v : view_idx) {
        const CameraView& cam = obj.views[v].cam;
        rendered.push_back(render_view(pred, cam, cfg.render_samples, cfg.render_mode));
        measured_sil.push_back(cam.silhouette);
        measured_depth.push_back(cam.depth);
    }
    std::vector<Image> rendered_sil;
    for (const RenderedView& rv : rendered) rendered_sil.push_back(rv.silhouette);

    const SilhouetteLoss ls = silhouette_loss(rendered_sil, measured_sil);
    const DepthLoss ld = depth_loss(rendered, measured_depth, cfg.w_min);

    for (size_t k = 0; k < 2; ++k) {
        Image d_sil, d_depth;
        if (w.lambda2 > 0.0) {
            d_sil = ls.grads[k];
            for (double& g : d_sil.data) g *= w.lambda2;
        }
        if (w.lambda3 > 0.0) {
            d_depth = ld.grads[k];
            for (double& g : d_depth.data) g *= w.lambda3;
        }
        const std::vector<double> g = render_backward(
            pred, obj.views[view_idx[k]].cam, cfg.render_samples, cfg.render_mode, d_sil,
            d_depth);
        for (size_t i = 0; i < upstream.size(); ++i) upstream[i] += g[i];
    }

    out.loss = w.lambda1 * bce.loss + w.lambda2 * ls.loss + w.lambda3 * ld.loss;
    out.param_grad = tiny_backward(params, cache, upstream);
    return out;
}

}  // namespace

TrainObject make_train_object(const ObjectRecord& rec, int blur_radius, Rng& rng) {
    if (rec.views.size() != rec.view_grids.size())
        throw std::invalid_argument("make_train_object: views/grids size mismatch");
    TrainObject out;
    out.id = rec.id;
    out.views.reserve(rec.views.size());
    for (size_t k = 0; k < rec.views.size(); ++k) {
        TrainView tv;
        tv.cam = rec.views[k].view;
        const double a = rng.uniform(0.8, 1.25);
        const double b = rng.uniform(-0.2, 0.2);
        tv.cam.depth = mono_depth_surrogate(tv.cam.depth, blur_radius, a, b);
        tv.grid = rec.view_grids[k];
        out.views.push_back(std::move(tv));
    }
    return out;
}

void TrainConfig::validate() const {
    if (phase1_epochs < 0 || phase2_epochs < 0)
        throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (T < 1) throw std::invalid_argument("TrainConfig: T must be >= 1");
    if (!(beta0 > 0.0) || betaT < beta0 || betaT >= 1.0)
        throw std::invalid_argument("TrainConfig: need 0 < beta0 <= betaT < 1");
    if (embed_dim < 2 || embed_dim % 2 != 0)
        throw std::invalid_argument("TrainConfig: embed_dim must be even and >= 2");
    if (hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
    if (render_samples < 2)
        throw std::invalid_argument("TrainConfig: render_samples must be >= 2");
    if (w_min < 0.0) throw std::invalid_argument("TrainConfig: w_min must be >= 0");
    if (second_view_ratio < 0.0)
        throw std::invalid_argument("TrainConfig: second_view_ratio must be >= 0");
    weights.validate();
}

TrainResult train(const std::vector<TrainObject>& dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    // objects live in their own anchored frames; only dims and voxel size
    // must agree across objects, full specs within one
    for (const TrainObject& obj : dataset) {
        if (obj.views.size() < 2)
            throw std::invalid_argument("train: object " + obj.id + " has fewer than 2 views");
        const GridSpec& s0 = dataset[0].views[0].grid.spec;
        const GridSpec& so = obj.views[0].grid.spec;
        for (const TrainView& v : obj.views)
            if (!(v.grid.spec == so))
                throw std::invalid_argument("train: views of object " + obj.id +
                                            " disagree on GridSpec");
        if (so.nx != s0.nx || so.ny != s0.ny || so.nz != s0.nz ||
            so.voxel_size != s0.voxel_size)
            throw std::invalid_argument("train: objects disagree on grid dims");
    }

    const VarianceSchedule sched = linear_schedule(cfg.T, cfg.beta0, cfg.betaT);
    TrainResult result;
    result.params = make_tiny_params(cfg.embed_dim, cfg.hidden, cfg.T, cfg.seed);

    TinyDenoiserParams snapshot = result.params;
    const Rng root(cfg.seed);
    const int total_epochs = cfg.phase1_epochs + cfg.phase2_epochs;
    const size_t n_params = result.params.param_count();

    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const int phase = epoch < cfg.phase1_epochs ? 1 : 2;
        Rng ep = root.stream("epoch", static_cast<uint64_t>(epoch));

        std::vector<size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), size_t{0});
        ep.shuffle(order);

        double epoch_loss = 0.0;
        bool diverged = false;
        for (size_t start = 0; start < order.size() && !diverged; start += cfg.batch) {
            const size_t stop = std::min(order.size(), start + cfg.batch);
            std::vector<double> grad(n_params, 0.0);
            double batch_loss = 0.0;
            for (size_t i = start; i < stop; ++i) {
                const ItemStep step =
                    item_step(result.params, dataset[order[i]], cfg, sched, phase, ep);
                batch_loss += step.loss;
                for (size_t p = 0; p < n_params; ++p) grad[p] += step.param_grad[p];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            if (!std::isfinite(batch_loss) || !all_finite(grad)) {
                diverged = true;
                break;
            }
            adam_step(result.params, grad, cfg.lr);
            epoch_loss += batch_loss;
        }

        epoch_loss /= static_cast<double>(dataset.size());
        if (diverged || !std::isfinite(epoch_loss) ||
            !all_finite(result.params.flatten())) {
            result.params = snapshot;
            result.aborted = true;
            break;
        }
        result.loss_curve.push_back(epoch_loss);
        snapshot = result.params;
    }

    result.completed_epochs = static_cast<int>(result.loss_curve.size());
    if (!cfg.checkpoint_base.empty()) write_checkpoint(cfg.checkpoint_base, result.params);
    return result;
}

StepGrad phase1_gradient(const TinyDenoiserParams& params, const OccupancyGrid& x0,
                         const OccupancyGrid& target, const ConditionMask& mask, int t,
                         const std::vector<double>& noise, const VarianceSchedule& sched) {
    const OccupancyGrid x_t = q_sample(x0, mask, t, noise, sched);
    ForwardCache cache;
    const OccupancyGrid pred = tiny_predict(params, x_t, mask, t, &cache);
    const BceResult bce = masked_bce_loss(pred, target, mask, 1);
    StepGrad out;
    out.loss = bce.loss;
    out.param_grad = tiny_backward(params, cache, bce.grad);
    return out;
}

}  // namespace realdiff
