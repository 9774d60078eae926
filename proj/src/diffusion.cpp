#include "realdiff/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace realdiff {

namespace {
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;
}  // namespace

void LossWeights::validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
        throw std::invalid_argument("LossWeights: weights must be nonnegative");
}

SamplerMode sampler_mode_from_string(const std::string& s) {
    if (s == "paper-eq6") return SamplerMode::PaperEq6;
    if (s == "ddpm-posterior") return SamplerMode::DdpmPosterior;
    throw std::invalid_argument("unknown sampler mode: " + s);
}

std::string to_string(SamplerMode mode) {
    return mode == SamplerMode::PaperEq6 ? "paper-eq6" : "ddpm-posterior";
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
    const long n = static_cast<long>(out.values.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        if (mask.bits[i]) continue;
        out.values[i] = s_ab * x0.values[i] + s_1mab * noise[i];
    }
    return out;
}

BceResult masked_bce_loss(const OccupancyGrid& pred, const OccupancyGrid& gt,
                          const ConditionMask& mask, int phase) {
    if (phase != 1 && phase != 2) throw std::invalid_argument("masked_bce_loss: phase must be 1 or 2");
    if (!(pred.spec == gt.spec) || !(pred.spec == mask.spec))
        throw std::invalid_argument("masked_bce_loss: spec mismatch");
    if (!gt.is_binary()) throw std::invalid_argument("masked_bce_loss: gt must be binary");

    const size_t n = pred.values.size();
    size_t support = 0;
    if (phase == 1) {
        support = n - mask.true_count();
        if (support == 0)
            throw std::invalid_argument("masked_bce_loss: phase 1 with all-true mask has no support");
    } else {
        support = n;
    }

    BceResult res;
    res.grad.assign(n, 0.0);
    const double inv_support = 1.0 / static_cast<double>(support);
    double loss = 0.0;
    // serial reduction keeps the sum independent of thread count; the grid
    // sizes in play make this loop cheap anyway
    for (size_t i = 0; i < n; ++i) {
        if (phase == 1 && mask.bits[i]) continue;
        const double y = gt.values[i];
        const double p_raw = pred.values[i];
        const double p = p_raw < kClampLo ? kClampLo : (p_raw > kClampHi ? kClampHi : p_raw);
        loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        if (p_raw > kClampLo && p_raw < kClampHi)
            res.grad[i] = (p - y) / (p * (1.0 - p)) * inv_support;
    }
    res.loss = loss * inv_support;
    return res;
}

OccupancyGrid reverse_step(const DiffusionState& state, const OccupancyGrid& x0_pred,
                           const VarianceSchedule& sched, const std::vector<double>& z,
                           SamplerMode mode) {
    const int t = state.t;
    if (t < 1 || t > sched.T) throw std::invalid_argument("reverse_step: t outside [1,T]");
    if (!(state.x_t.spec == x0_pred.spec) || !(state.x_t.spec == state.mask.spec))
        throw std::invalid_argument("reverse_step: spec mismatch");
    if (z.size() != state.x_t.values.size())
        throw std::invalid_argument("reverse_step: noise field has wrong size");

    const double a = sched.alpha(t);
    const double b = sched.beta(t);
    const double ab = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);

    OccupancyGrid out = state.x_t;
    const long n = static_cast<long>(out.values.size());

    if (mode == SamplerMode::PaperEq6) {
        const double inv_sa = 1.0 / std::sqrt(a);
        const double coef = (1.0 - a) / std::sqrt(1.0 - ab);
        const double s_b = std::sqrt(b);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) {
            const double x = state.x_t.values[i];
            out.values[i] = inv_sa * (x - coef * (x - x0_pred.values[i])) + s_b * z[i];
        }
    } else {
        // q(x_{t-1} | x_t, x0): mean mixes x0_pred and x_t, variance beta_tilde
        const double c0 = std::sqrt(ab_prev) * b / (1.0 - ab);
        const double ct = std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab);
        const double beta_tilde = (1.0 - ab_prev) / (1.0 - ab) * b;
        const double s_bt = std::sqrt(beta_tilde);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i)
            out.values[i] = c0 * x0_pred.values[i] + ct * state.x_t.values[i] + s_bt * z[i];
    }

    // the known region rides along unchanged
    for (long i = 0; i < n; ++i)
        if (state.mask.bits[i]) out.values[i] = state.x_t.values[i];
    out.noised = true;
    return out;
}

OccupancyGrid generate(const Denoiser& denoiser, const OccupancyGrid& c0,
                       const ConditionMask& mask, const VarianceSchedule& sched, Rng& rng,
                       SamplerMode mode) {
    if (!(c0.spec == mask.spec)) throw std::invalid_argument("generate: spec mismatch");
    const size_t n = c0.values.size();

    DiffusionState state;
    state.mask = mask;
    state.x_t = c0;
    state.x_t.noised = true;
    for (size_t i = 0; i < n; ++i)
        if (!mask.bits[i]) state.x_t.values[i] = rng.normal();
    state.t = sched.T;

    std::vector<double> z(n, 0.0);
    for (int t = sched.T; t >= 1; --t) {
        state.t = t;
        OccupancyGrid x0_pred = denoiser.predict(state.x_t, mask, t);
        if (t > 1) {
            for (size_t i = 0; i < n; ++i) z[i] = rng.normal();
        } else {
            std::fill(z.begin(), z.end(), 0.0);
        }
        state.x_t = reverse_step(state, x0_pred, sched, z, mode);
        for (size_t i = 0; i < n; ++i)
            if (mask.bits[i] && state.x_t.values[i] != c0.values[i])
                throw std::logic_error("generate: condition region drifted during sampling");
    }

    OccupancyGrid out = state.x_t;
    out.noised = false;
    for (double& v : out.values) v = v > 0.5 ? 1.0 : 0.0;
    return out;
}

}  // namespace realdiff
