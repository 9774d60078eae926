#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "realdiff/denoiser.hpp"
#include "realdiff/grid.hpp"
#include "realdiff/rng.hpp"
#include "realdiff/tensor.hpp"

namespace realdiff {

// One 3x3x3 same-padded conv layer. Weights laid out
// [c_out][c_in][kz][ky][kx] with kx fastest, matching the grid order.
struct ConvLayer {
    int c_in = 0, c_out = 0;
    std::vector<double> w;  // c_out * c_in * 27
    std::vector<double> b;  // c_out
};

// Three conv layers (2+E -> hidden -> hidden -> 1) with rectifier between
// and a logistic squash at the end. Input channels: noised field, mask,
// then E constant time-embedding channels.
struct TinyDenoiserParams {
    int embed_dim = 8;
    int hidden = 8;
    int T = 50;
    std::vector<ConvLayer> layers;

    // optimizer state, same flat ordering as flatten()
    std::vector<double> adam_m, adam_v;
    long step = 0;
    uint64_t seed = 0;

    size_t param_count() const;
    std::vector<double> flatten() const;           // layer order, kernel then bias
    void unflatten(const std::vector<double>& flat);
};

TinyDenoiserParams make_tiny_params(int embed_dim, int hidden, int T, uint64_t seed);

// Activations kept from a forward pass so the backward pass can replay it.
struct ForwardCache {
    GridSpec spec;
    int t = -1;
    std::vector<DenseTensor> acts;  // input, post-relu per hidden layer
    std::vector<double> probs;      // logistic output
    bool valid() const { return !acts.empty() && !probs.empty(); }
};

OccupancyGrid tiny_predict(const TinyDenoiserParams& params, const OccupancyGrid& x_t,
                           const ConditionMask& mask, int t, ForwardCache* cache = nullptr);

// Reverse-mode pass; upstream is d loss / d probs over the grid. Returns the
// flat parameter gradient (flatten() ordering).
std::vector<double> tiny_backward(const TinyDenoiserParams& params, const ForwardCache& cache,
                                  const std::vector<double>& upstream);

void adam_step(TinyDenoiserParams& params, const std::vector<double>& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// <base>.ckpt.json (architecture, step, seed) + <base>.ckpt.bin (parameters
// then Adam m then v, little-endian f32).
void write_checkpoint(const std::string& base_path, const TinyDenoiserParams& params);
TinyDenoiserParams read_checkpoint(const std::string& base_path);

// Denoiser-interface adapter so the sampler can drive a trained model.
class TinyDenoiser : public Denoiser {
  public:
    explicit TinyDenoiser(TinyDenoiserParams params) : params_(std::move(params)) {}
    OccupancyGrid predict(const OccupancyGrid& x_t, const ConditionMask& mask,
                          int t) const override {
        return tiny_predict(params_, x_t, mask, t);
    }
    const TinyDenoiserParams& params() const { return params_; }

  private:
    TinyDenoiserParams params_;
};

}  // namespace realdiff
