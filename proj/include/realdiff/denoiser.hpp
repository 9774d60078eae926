#pragma once

#include <vector>

#include "realdiff/grid.hpp"

namespace realdiff {

// x0-prediction interface: given the noised field, the condition mask, and
// the step index, return occupancy probabilities for the whole grid.
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual OccupancyGrid predict(const OccupancyGrid& x_t, const ConditionMask& mask,
                                  int t) const = 0;
};

// Ignores (x_t, t) and returns the ground truth mapped into (0,1); exists to
// exercise the sampler independently of any training.
class OracleDenoiser : public Denoiser {
  public:
    explicit OracleDenoiser(OccupancyGrid gt);
    OccupancyGrid predict(const OccupancyGrid& x_t, const ConditionMask& mask,
                          int t) const override;

  private:
    OccupancyGrid probs_;
};

// Sinusoidal features [sin(t/w_k), cos(t/w_k)], w_k = 10000^(k/half),
// k = 0..dim/2-1. dim must be even.
std::vector<double> time_embedding(int t, int dim, int T);

}  // namespace realdiff
