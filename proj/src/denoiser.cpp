#include "realdiff/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace realdiff {

OracleDenoiser::OracleDenoiser(OccupancyGrid gt) : probs_(std::move(gt)) {
    if (!probs_.is_binary()) throw std::invalid_argument("OracleDenoiser: gt must be binary");
    for (double& v : probs_.values) v = v == 1.0 ? 0.999 : 0.001;
}

OccupancyGrid OracleDenoiser::predict(const OccupancyGrid& x_t, const ConditionMask& mask,
                                      int t) const {
    (void)t;
    if (!(x_t.spec == probs_.spec) || !(mask.spec == probs_.spec))
        throw std::invalid_argument("OracleDenoiser: grid spec mismatch");
    return probs_;
}

std::vector<double> time_embedding(int t, int dim, int T) {
    if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even and positive");
    if (t < 0 || t > T) throw std::invalid_argument("time_embedding: t outside [0,T]");
    const int half = dim / 2;
    std::vector<double> emb(dim);
    for (int k = 0; k < half; ++k) {
        double omega = std::pow(10000.0, static_cast<double>(k) / half);
        emb[2 * k] = std::sin(t / omega);
        emb[2 * k + 1] = std::cos(t / omega);
    }
    return emb;
}

}  // namespace realdiff
