#pragma once

#include <vector>

namespace realdiff {

// Noise variance tables for the forward/reverse chains. Steps are 1-indexed:
// beta(1) is the first noising step. alpha_bar(0) is defined as 1 so the
// posterior coefficients at t=1 need no special case.
struct VarianceSchedule {
    int T = 0;
    std::vector<double> beta_;       // beta_[t-1] = beta_t
    std::vector<double> alpha_;      // 1 - beta_t
    std::vector<double> alpha_bar_;  // prod_{s<=t} alpha_s
    std::vector<double> sigma2_;     // = beta_t

    double beta(int t) const { return beta_.at(t - 1); }
    double alpha(int t) const { return alpha_.at(t - 1); }
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_.at(t - 1); }
    double sigma2(int t) const { return sigma2_.at(t - 1); }
};

// beta_1 = beta0, beta_T = betaT, linear in between; betaT must stay below 1
// or the transition kernel degenerates.
VarianceSchedule linear_schedule(int T, double beta0, double betaT);

}  // namespace realdiff
