#include "realdiff/schedule.hpp"

#include <stdexcept>

namespace realdiff {

VarianceSchedule linear_schedule(int T, double beta0, double betaT) {
    if (T < 1) throw std::invalid_argument("linear_schedule: T must be >= 1");
    if (!(beta0 > 0.0) || !(beta0 <= betaT) || !(betaT < 1.0))
        throw std::invalid_argument("linear_schedule: need 0 < beta0 <= betaT < 1");

    VarianceSchedule s;
    s.T = T;
    s.beta_.resize(T);
    s.alpha_.resize(T);
    s.alpha_bar_.resize(T);
    s.sigma2_.resize(T);

    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        double b = T == 1 ? beta0 : beta0 + (betaT - beta0) * i / (T - 1);
        s.beta_[i] = b;
        s.alpha_[i] = 1.0 - b;
        prod *= s.alpha_[i];
        s.alpha_bar_[i] = prod;
        s.sigma2_[i] = b;
    }
    return s;
}

}  // namespace realdiff
