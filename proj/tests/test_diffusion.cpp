#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "realdiff/diffusion.hpp"

using namespace realdiff;

namespace {

GridSpec small_spec(int n) {
    GridSpec s;
    s.nx = s.ny = s.nz = n;
    s.voxel_size = 1.0 / n;
    s.origin = {0, 0, 0};
    return s;
}

OccupancyGrid random_binary(const GridSpec& spec, Rng& rng, double p_occ = 0.3) {
    OccupancyGrid g(spec);
    for (double& v : g.values) v = rng.uniform() < p_occ ? 1.0 : 0.0;
    return g;
}

}  // namespace

TEST_CASE("forward noising with zero noise is a pure scaling") {
    GridSpec spec = small_spec(4);
    Rng rng(1);
    OccupancyGrid x0 = random_binary(spec, rng);
    ConditionMask mask(spec, false);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    std::vector<double> zeros(spec.cell_count(), 0.0);

    for (int t : {1, 10, 50}) {
        OccupancyGrid xt = q_sample(x0, mask, t, zeros, sched);
        CHECK(xt.noised);
        double c = std::sqrt(sched.alpha_bar(t));
        for (size_t i = 0; i < xt.values.size(); ++i)
            CHECK(xt.values[i] == doctest::Approx(c * x0.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("at t=T of the 1000-step schedule the signal term nearly vanishes") {
    GridSpec spec = small_spec(4);
    OccupancyGrid x0(spec, 1.0);
    ConditionMask mask(spec, false);
    VarianceSchedule sched = linear_schedule(1000, 1e-4, 2e-2);

    Rng rng(2);
    std::vector<double> z(spec.cell_count());
    for (double& v : z) v = rng.normal();

    OccupancyGrid xt = q_sample(x0, mask, 1000, z, sched);
    const double sig = std::sqrt(sched.alpha_bar(1000));  // ~6.3e-3
    for (size_t i = 0; i < z.size(); ++i) {
        CHECK(std::abs(xt.values[i] - z[i]) < sig + 1e-3);
        CHECK(xt.values[i] == doctest::Approx(sig * 1.0 + std::sqrt(1.0 - sched.alpha_bar(1000)) * z[i])
                                  .epsilon(1e-12));
    }
}

TEST_CASE("condition region passes through the forward process untouched") {
    GridSpec spec = small_spec(4);
    Rng rng(3);
    OccupancyGrid x0 = random_binary(spec, rng);
    ConditionMask mask = condition_split(x0);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);

    std::vector<double> z(spec.cell_count());
    for (double& v : z) v = rng.normal();
    OccupancyGrid xt = q_sample(x0, mask, 25, z, sched);
    for (size_t i = 0; i < xt.values.size(); ++i)
        if (mask.bits[i]) CHECK(xt.values[i] == x0.values[i]);
}

TEST_CASE("forward noising is affine in signal and noise") {
    GridSpec spec = small_spec(3);
    Rng rng(4);
    OccupancyGrid x0 = random_binary(spec, rng);
    ConditionMask mask(spec, false);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    const int t = 20;

    std::vector<double> z(spec.cell_count());
    for (double& v : z) v = rng.normal();
    std::vector<double> zeros(spec.cell_count(), 0.0);

    OccupancyGrid mean = q_sample(x0, mask, t, zeros, sched);
    OccupancyGrid noisy = q_sample(x0, mask, t, z, sched);
    const double s_n = std::sqrt(1.0 - sched.alpha_bar(t));
    for (size_t i = 0; i < z.size(); ++i)
        CHECK(noisy.values[i] - mean.values[i] == doctest::Approx(s_n * z[i]).epsilon(1e-12));
}

TEST_CASE("forward marginals match the closed form over many draws") {
    GridSpec spec = small_spec(2);  // 8 voxels, x0 = 1
    OccupancyGrid x0(spec, 1.0);
    ConditionMask mask(spec, false);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    const int t = 30;
    const int draws = 10000;

    Rng rng(5);
    std::vector<double> z(spec.cell_count());
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (int d = 0; d < draws; ++d) {
        for (double& v : z) v = rng.normal();
        OccupancyGrid xt = q_sample(x0, mask, t, z, sched);
        // first voxel only, so samples stay i.i.d.
        sum += xt.values[0];
        sum2 += xt.values[0] * xt.values[0];
        ++n;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double want_mean = std::sqrt(sched.alpha_bar(t));
    const double want_var = 1.0 - sched.alpha_bar(t);
    const double se_mean = std::sqrt(want_var / n);
    const double se_var = want_var * std::sqrt(2.0 / n);
    CHECK(std::abs(mean - want_mean) < 3.0 * se_mean);
    CHECK(std::abs(var - want_var) < 3.0 * se_var);
}

TEST_CASE("q_sample rejects t outside [1,T] and bad noise shape") {
    GridSpec spec = small_spec(2);
    OccupancyGrid x0(spec, 0.0);
    ConditionMask mask(spec, false);
    VarianceSchedule sched = linear_schedule(10, 1e-4, 2e-2);
    std::vector<double> z(spec.cell_count(), 0.0);
    CHECK_THROWS_AS(q_sample(x0, mask, 0, z, sched), std::invalid_argument);
    CHECK_THROWS_AS(q_sample(x0, mask, 11, z, sched), std::invalid_argument);
    std::vector<double> short_z(3, 0.0);
    CHECK_THROWS_AS(q_sample(x0, mask, 5, short_z, sched), std::invalid_argument);
}

TEST_CASE("bce: perfect prediction has near-zero loss") {
    GridSpec spec = small_spec(4);
    Rng rng(6);
    OccupancyGrid gt = random_binary(spec, rng);
    ConditionMask mask(spec, false);

    OccupancyGrid pred = gt;
    for (double& v : pred.values) v = v == 1.0 ? 1.0 - 1e-7 : 1e-7;
    BceResult r = masked_bce_loss(pred, gt, mask, 1);
    CHECK(r.loss <= 1e-5);
}

TEST_CASE("bce: uniform half prediction costs ln 2 per voxel") {
    GridSpec spec = small_spec(4);
    Rng rng(7);
    OccupancyGrid gt = random_binary(spec, rng);
    ConditionMask mask(spec, false);
    OccupancyGrid pred(spec, 0.5);
    CHECK(masked_bce_loss(pred, gt, mask, 1).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(masked_bce_loss(pred, gt, mask, 2).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce phase 1: condition voxels contribute nothing") {
    GridSpec spec = small_spec(4);
    Rng rng(8);
    OccupancyGrid gt = random_binary(spec, rng, 0.4);
    ConditionMask mask = condition_split(gt);
    REQUIRE(mask.true_count() > 0);
    REQUIRE(mask.true_count() < spec.cell_count());

    OccupancyGrid pred(spec, 0.3);
    BceResult base = masked_bce_loss(pred, gt, mask, 1);

    size_t cond_idx = 0;
    while (!mask.bits[cond_idx]) ++cond_idx;

    // central finite difference at a masked voxel is exactly zero
    const double h = 1e-4;
    OccupancyGrid up = pred, dn = pred;
    up.values[cond_idx] += h;
    dn.values[cond_idx] -= h;
    double fd = (masked_bce_loss(up, gt, mask, 1).loss - masked_bce_loss(dn, gt, mask, 1).loss) /
                (2.0 * h);
    CHECK(std::abs(fd) <= 1e-9);
    CHECK(base.grad[cond_idx] == 0.0);

    // phase 2 lifts the mask: same perturbation now moves the loss
    double fd2 = (masked_bce_loss(up, gt, mask, 2).loss - masked_bce_loss(dn, gt, mask, 2).loss) /
                 (2.0 * h);
    CHECK(std::abs(fd2) > 1e-6);
}

TEST_CASE("bce gradient matches central differences on the support") {
    GridSpec spec = small_spec(3);
    Rng rng(9);
    OccupancyGrid gt = random_binary(spec, rng);
    ConditionMask mask = condition_split(gt);
    OccupancyGrid pred(spec);
    for (double& v : pred.values) v = 0.05 + 0.9 * rng.uniform();

    for (int phase : {1, 2}) {
        BceResult r = masked_bce_loss(pred, gt, mask, phase);
        const double h = 1e-6;
        for (size_t i = 0; i < pred.values.size(); i += 3) {
            OccupancyGrid up = pred, dn = pred;
            up.values[i] += h;
            dn.values[i] -= h;
            double fd = (masked_bce_loss(up, gt, mask, phase).loss -
                         masked_bce_loss(dn, gt, mask, phase).loss) /
                        (2.0 * h);
            CHECK(r.grad[i] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("bce rejects phase-1 with all-true mask and non-binary gt") {
    GridSpec spec = small_spec(2);
    OccupancyGrid gt(spec, 1.0);
    ConditionMask all(spec, true);
    OccupancyGrid pred(spec, 0.5);
    CHECK_THROWS_AS(masked_bce_loss(pred, gt, all, 1), std::invalid_argument);
    CHECK_NOTHROW(masked_bce_loss(pred, gt, all, 2));

    OccupancyGrid soft(spec, 0.5);
    ConditionMask none(spec, false);
    CHECK_THROWS_AS(masked_bce_loss(pred, soft, none, 1), std::invalid_argument);
}

TEST_CASE("reverse step with x0_pred = x_t and no noise just rescales") {
    GridSpec spec = small_spec(3);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    Rng rng(10);

    DiffusionState st;
    st.mask = ConditionMask(spec, false);
    st.x_t = OccupancyGrid(spec);
    st.x_t.noised = true;
    for (double& v : st.x_t.values) v = rng.normal();
    st.t = 17;

    std::vector<double> z0(spec.cell_count(), 0.0);
    OccupancyGrid prev = reverse_step(st, st.x_t, sched, z0, SamplerMode::PaperEq6);
    const double inv_sa = 1.0 / std::sqrt(sched.alpha(17));
    for (size_t i = 0; i < prev.values.size(); ++i)
        CHECK(prev.values[i] == doctest::Approx(st.x_t.values[i] * inv_sa).epsilon(1e-12));
}

TEST_CASE("reverse step always restores the condition region") {
    GridSpec spec = small_spec(3);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    Rng rng(11);

    OccupancyGrid c0 = random_binary(spec, rng, 0.5);
    ConditionMask mask = condition_split(c0);

    DiffusionState st;
    st.mask = mask;
    st.x_t = c0;
    st.x_t.noised = true;
    for (size_t i = 0; i < st.x_t.values.size(); ++i)
        if (!mask.bits[i]) st.x_t.values[i] = rng.normal();
    st.t = 5;

    OccupancyGrid wild(spec, 0.123);  // adversarial x0 prediction
    std::vector<double> z(spec.cell_count());
    for (double& v : z) v = rng.normal();

    for (SamplerMode mode : {SamplerMode::PaperEq6, SamplerMode::DdpmPosterior}) {
        OccupancyGrid prev = reverse_step(st, wild, sched, z, mode);
        for (size_t i = 0; i < prev.values.size(); ++i)
            if (mask.bits[i]) CHECK(prev.values[i] == c0.values[i]);
    }
}

TEST_CASE("posterior mode at t=1 returns the x0 prediction exactly") {
    GridSpec spec = small_spec(3);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    Rng rng(12);

    DiffusionState st;
    st.mask = ConditionMask(spec, false);
    st.x_t = OccupancyGrid(spec);
    st.x_t.noised = true;
    for (double& v : st.x_t.values) v = rng.normal();
    st.t = 1;

    OccupancyGrid x0p(spec);
    for (double& v : x0p.values) v = rng.uniform();

    std::vector<double> z0(spec.cell_count(), 0.0);
    OccupancyGrid prev = reverse_step(st, x0p, sched, z0, SamplerMode::DdpmPosterior);
    // alpha_bar(0) = 1 makes the x_t coefficient vanish and the x0
    // coefficient equal 1
    for (size_t i = 0; i < prev.values.size(); ++i)
        CHECK(prev.values[i] == doctest::Approx(x0p.values[i]).epsilon(1e-12));
}

TEST_CASE("reverse step rejects t=0") {
    GridSpec spec = small_spec(2);
    VarianceSchedule sched = linear_schedule(10, 1e-4, 2e-2);
    DiffusionState st;
    st.mask = ConditionMask(spec, false);
    st.x_t = OccupancyGrid(spec);
    st.t = 0;
    std::vector<double> z(spec.cell_count(), 0.0);
    CHECK_THROWS_AS(reverse_step(st, st.x_t, sched, z, SamplerMode::PaperEq6),
                    std::invalid_argument);
}

TEST_CASE("oracle-driven generation recovers the target on every voxel") {
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    GridSpec spec = small_spec(8);

    for (int trial = 0; trial < 20; ++trial) {
        Rng shape_rng(1000 + trial);
        OccupancyGrid gt = random_binary(spec, shape_rng, 0.25);
        // condition on a bitten-off half: clear the upper-z part
        OccupancyGrid c0 = gt;
        for (int iz = spec.nz / 2; iz < spec.nz; ++iz)
            for (int iy = 0; iy < spec.ny; ++iy)
                for (int ix = 0; ix < spec.nx; ++ix) c0.at(ix, iy, iz) = 0.0;
        ConditionMask mask = condition_split(c0);

        OracleDenoiser oracle(gt);
        Rng gen_rng(2000 + trial);
        OccupancyGrid out = generate(oracle, c0, mask, sched, gen_rng, SamplerMode::DdpmPosterior);
        CHECK(out.is_binary());
        CHECK(out.values == gt.values);
    }
}

TEST_CASE("constant low prediction with empty condition yields an empty grid") {
    GridSpec spec = small_spec(8);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);

    class ConstDenoiser : public Denoiser {
      public:
        OccupancyGrid predict(const OccupancyGrid& x_t, const ConditionMask&, int) const override {
            return OccupancyGrid(x_t.spec, 0.1);
        }
    } constant;

    OccupancyGrid c0(spec, 0.0);
    ConditionMask mask(spec, false);
    Rng rng(13);
    OccupancyGrid out = generate(constant, c0, mask, sched, rng, SamplerMode::DdpmPosterior);
    CHECK(out.occupied_count() == 0);
}

TEST_CASE("generation is bit-identical for a fixed seed and keeps c0") {
    GridSpec spec = small_spec(8);
    VarianceSchedule sched = linear_schedule(50, 1e-4, 2e-2);
    Rng shape_rng(14);
    OccupancyGrid gt = random_binary(spec, shape_rng, 0.3);
    OccupancyGrid c0 = gt;
    for (size_t i = 0; i < c0.values.size(); i += 2) c0.values[i] = 0.0;
    ConditionMask mask = condition_split(c0);
    OracleDenoiser oracle(gt);

    for (SamplerMode mode : {SamplerMode::PaperEq6, SamplerMode::DdpmPosterior}) {
        Rng r1(99), r2(99);
        OccupancyGrid a = generate(oracle, c0, mask, sched, r1, mode);
        OccupancyGrid b = generate(oracle, c0, mask, sched, r2, mode);
        CHECK(a.values == b.values);
        for (size_t i = 0; i < a.values.size(); ++i)
            if (mask.bits[i]) CHECK(a.values[i] == c0.values[i]);
    }
}

TEST_CASE("sampler mode names round-trip") {
    CHECK(sampler_mode_from_string("paper-eq6") == SamplerMode::PaperEq6);
    CHECK(sampler_mode_from_string("ddpm-posterior") == SamplerMode::DdpmPosterior);
    CHECK(to_string(SamplerMode::PaperEq6) == "paper-eq6");
    CHECK(to_string(SamplerMode::DdpmPosterior) == "ddpm-posterior");
    CHECK_THROWS(sampler_mode_from_string("ddim"));
}
