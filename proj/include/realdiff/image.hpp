#pragma once

#include <string>
#include <vector>

namespace realdiff {

// Row-major scalar image, row 0 at the top.
struct Image {
    int width = 0, height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int u, int v) { return data[static_cast<size_t>(v) * width + u]; }
    double at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
    size_t pixel_count() const { return data.size(); }
    bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

// Binary masks as 8-bit PGM: 255 = object, 0 = background. Writing demands
// values in {0,1}; reading maps any nonzero byte to 1.
void write_pgm(const std::string& path, const Image& mask);
Image read_pgm(const std::string& path);

// Depth maps as grayscale PFM (negative scale = little endian, rows stored
// bottom-up). Invalid pixels carry -1.
void write_pfm(const std::string& path, const Image& depth);
Image read_pfm(const std::string& path);

}  // namespace realdiff
