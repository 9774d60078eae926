#include "realdiff/image.hpp"

#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace realdiff {

namespace {

// next whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) continue;
        tok.push_back(static_cast<char>(c));
        while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(c));
        if (c == '#') in.unget();
        break;
    }
    if (tok.empty()) throw std::runtime_error("unexpected end of header");
    return tok;
}

}  // namespace

void write_pgm(const std::string& path, const Image& mask) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<uint8_t> row(mask.width);
    for (int v = 0; v < mask.height; ++v) {
        for (int u = 0; u < mask.width; ++u) {
            double x = mask.at(u, v);
            if (x != 0.0 && x != 1.0)
                throw std::invalid_argument("write_pgm: mask values must be 0 or 1");
            row[u] = x == 1.0 ? 255 : 0;
        }
        f.write(reinterpret_cast<const char*>(row.data()), mask.width);
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Image read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    try {
        if (next_token(f) != "P5") throw std::runtime_error("not a P5 file");
        int w = std::stoi(next_token(f));
        int h = std::stoi(next_token(f));
        int maxval = std::stoi(next_token(f));
        if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
            throw std::runtime_error("bad header fields");
        // exactly one whitespace byte separates header and payload; the
        // token reader already consumed it
        Image img(w, h);
        std::vector<uint8_t> row(w);
        for (int v = 0; v < h; ++v) {
            f.read(reinterpret_cast<char*>(row.data()), w);
            if (!f) throw std::runtime_error("truncated payload");
            for (int u = 0; u < w; ++u) img.at(u, v) = row[u] ? 1.0 : 0.0;
        }
        return img;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_pfm(const std::string& path, const Image& depth) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
    std::vector<float> row(depth.width);
    // pfm rows run bottom-up
    for (int v = depth.height - 1; v >= 0; --v) {
        for (int u = 0; u < depth.width; ++u) row[u] = static_cast<float>(depth.at(u, v));
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Image read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    try {
        std::string magic = next_token(f);
        if (magic == "PF") throw std::runtime_error("color PFM not supported");
        if (magic != "Pf") throw std::runtime_error("not a PFM file");
        int w = std::stoi(next_token(f));
        int h = std::stoi(next_token(f));
        double scale = std::stod(next_token(f));
        if (w <= 0 || h <= 0) throw std::runtime_error("bad dimensions");
        if (scale >= 0.0) throw std::runtime_error("big-endian PFM not supported");

        Image img(w, h);
        std::vector<float> row(w);
        for (int v = h - 1; v >= 0; --v) {
            f.read(reinterpret_cast<char*>(row.data()),
                   static_cast<std::streamsize>(row.size() * sizeof(float)));
            if (!f) throw std::runtime_error("truncated payload");
            for (int u = 0; u < w; ++u) img.at(u, v) = row[u];
        }
        return img;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace realdiff
