#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace realdiff {

// Minimal dense container for conv activations: shape [C, nz, ny, nx] with
// the same x-fastest layout as the grids.
struct DenseTensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::optional<std::vector<double>> grad;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel(), 0.0);
    }

    size_t numel() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
    void alloc_grad() { grad.emplace(data.size(), 0.0); }
};

}  // namespace realdiff
