#include "realdiff/tiny_denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace realdiff {

namespace {

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Dims {
    int nx, ny, nz;
    long nvox;
};

Dims dims_of(const GridSpec& spec) {
    return {spec.nx, spec.ny, spec.nz, static_cast<long>(spec.cell_count())};
}

// out[co][p] = b[co] + sum_{ci,k} w[co][ci][k] * in[ci][p+k], zero padded.
// Every output element is written by exactly one iteration, so the result
// does not depend on the thread count.
void conv_forward(const DenseTensor& in, const ConvLayer& layer, const Dims& d,
                  DenseTensor& out) {
    const double* src = in.data.data();
    double* dst = out.data.data();
#pragma omp parallel for schedule(static) collapse(2)
    for (int co = 0; co < layer.c_out; ++co) {
        for (int iz = 0; iz < d.nz; ++iz) {
            for (int iy = 0; iy < d.ny; ++iy) {
                for (int ix = 0; ix < d.nx; ++ix) {
                    double sum = layer.b[co];
                    for (int ci = 0; ci < layer.c_in; ++ci) {
                        const double* w = &layer.w[(static_cast<size_t>(co) * layer.c_in + ci) * 27];
                        const double* chan = src + static_cast<size_t>(ci) * d.nvox;
                        for (int dz = -1; dz <= 1; ++dz) {
                            const int z = iz + dz;
                            if (z < 0 || z >= d.nz) continue;
                            for (int dy = -1; dy <= 1; ++dy) {
                                const int y = iy + dy;
                                if (y < 0 || y >= d.ny) continue;
                                for (int dx = -1; dx <= 1; ++dx) {
                                    const int x = ix + dx;
                                    if (x < 0 || x >= d.nx) continue;
                                    sum += w[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))] *
                                           chan[x + d.nx * (y + static_cast<long>(d.ny) * z)];
                                }
                            }
                        }
                    }
                    dst[static_cast<size_t>(co) * d.nvox + ix +
                        d.nx * (iy + static_cast<long>(d.ny) * iz)] = sum;
                }
            }
        }
    }
}

// dL/din[ci][q] = sum_{co,k} w[co][ci][k] * dout[co][q-k]
void conv_backward_input(const DenseTensor& dout, const ConvLayer& layer, const Dims& d,
                         DenseTensor& din) {
    const double* up = dout.data.data();
    double* dst = din.data.data();
#pragma omp parallel for schedule(static) collapse(2)
    for (int ci = 0; ci < layer.c_in; ++ci) {
        for (int iz = 0; iz < d.nz; ++iz) {
            for (int iy = 0; iy < d.ny; ++iy) {
                for (int ix = 0; ix < d.nx; ++ix) {
                    double sum = 0.0;
                    for (int co = 0; co < layer.c_out; ++co) {
                        const double* w = &layer.w[(static_cast<size_t>(co) * layer.c_in + ci) * 27];
                        const double* chan = up + static_cast<size_t>(co) * d.nvox;
                        for (int dz = -1; dz <= 1; ++dz) {
                            const int z = iz - dz;
                            if (z < 0 || z >= d.nz) continue;
                            for (int dy = -1; dy <= 1; ++dy) {
                                const int y = iy - dy;
                                if (y < 0 || y >= d.ny) continue;
                                for (int dx = -1; dx <= 1; ++dx) {
                                    const int x = ix - dx;
                                    if (x < 0 || x >= d.nx) continue;
                                    sum += w[(dx + 1) + 3 * ((dy + 1) + 3 * (dz + 1))] *
                                           chan[x + d.nx * (y + static_cast<long>(d.ny) * z)];
                                }
                            }
                        }
                    }
                    dst[static_cast<size_t>(ci) * d.nvox + ix +
                        d.nx * (iy + static_cast<long>(d.ny) * iz)] = sum;
                }
            }
        }
    }
}

// dW[co][ci][k] = sum_p dout[co][p] * in[ci][p+k]; each weight gets its own
// serial sum over the grid, so parallelizing over weights stays exact.
void conv_backward_params(const DenseTensor& in, const DenseTensor& dout, const ConvLayer& layer,
                          const Dims& d, std::vector<double>& dw, std::vector<double>& db) {
    dw.assign(layer.w.size(), 0.0);
    db.assign(layer.b.size(), 0.0);
    const double* src = in.data.data();
    const double* up = dout.data.data();

    const long n_weights = static_cast<long>(layer.w.size());
#pragma omp parallel for schedule(static)
    for (long wi = 0; wi < n_weights; ++wi) {
        const int k = static_cast<int>(wi % 27);
        const int ci = static_cast<int>((wi / 27) % layer.c_in);
        const int co = static_cast<int>(wi / 27 / layer.c_in);
        const int dx = k % 3 - 1, dy = (k / 3) % 3 - 1, dz = k / 9 - 1;
        const double* chan = src + static_cast<size_t>(ci) * d.nvox;
        const double* uchan = up + static_cast<size_t>(co) * d.nvox;
        double sum = 0.0;
        for (int iz = 0; iz < d.nz; ++iz) {
            const int z = iz + dz;
            if (z < 0 || z >= d.nz) continue;
            for (int iy = 0; iy < d.ny; ++iy) {
                const int y = iy + dy;
                if (y < 0 || y >= d.ny) continue;
                for (int ix = 0; ix < d.nx; ++ix) {
                    const int x = ix + dx;
                    if (x < 0 || x >= d.nx) continue;
                    sum += uchan[ix + d.nx * (iy + static_cast<long>(d.ny) * iz)] *
                           chan[x + d.nx * (y + static_cast<long>(d.ny) * z)];
                }
            }
        }
        dw[wi] = sum;
    }

#pragma omp parallel for schedule(static)
    for (int co = 0; co < layer.c_out; ++co) {
        const double* uchan = up + static_cast<size_t>(co) * d.nvox;
        double sum = 0.0;
        for (long p = 0; p < d.nvox; ++p) sum += uchan[p];
        db[co] = sum;
    }
}

}  // namespace

size_t TinyDenoiserParams::param_count() const {
    size_t n = 0;
    for (const ConvLayer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> TinyDenoiserParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const ConvLayer& l : layers) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void TinyDenoiserParams::unflatten(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("unflatten: size mismatch");
    size_t off = 0;
    for (ConvLayer& l : layers) {
        std::copy(flat.begin() + off, flat.begin() + off + l.w.size(), l.w.begin());
        off += l.w.size();
        std::copy(flat.begin() + off, flat.begin() + off + l.b.size(), l.b.begin());
        off += l.b.size();
    }
}

TinyDenoiserParams make_tiny_params(int embed_dim, int hidden, int T, uint64_t seed) {
    if (embed_dim <= 0 || embed_dim % 2 != 0)
        throw std::invalid_argument("make_tiny_params: embed_dim must be even and positive");
    if (hidden < 1 || T < 1) throw std::invalid_argument("make_tiny_params: bad hidden/T");

    TinyDenoiserParams p;
    p.embed_dim = embed_dim;
    p.hidden = hidden;
    p.T = T;
    p.seed = seed;

    const int in_c = 2 + embed_dim;
    const int chans[4] = {in_c, hidden, hidden, 1};
    Rng rng(seed);
    for (int l = 0; l < 3; ++l) {
        ConvLayer layer;
        layer.c_in = chans[l];
        layer.c_out = chans[l + 1];
        layer.w.resize(static_cast<size_t>(layer.c_out) * layer.c_in * 27);
        layer.b.assign(layer.c_out, 0.0);
        const double scale = std::sqrt(2.0 / (layer.c_in * 27.0));
        for (double& w : layer.w) w = scale * rng.normal();
        p.layers.push_back(std::move(layer));
    }
    p.adam_m.assign(p.param_count(), 0.0);
    p.adam_v.assign(p.param_count(), 0.0);
    p.step = 0;
    return p;
}

OccupancyGrid tiny_predict(const TinyDenoiserParams& params, const OccupancyGrid& x_t,
                           const ConditionMask& mask, int t, ForwardCache* cache) {
    if (!(x_t.spec == mask.spec)) throw std::invalid_argument("tiny_predict: spec mismatch");
    if (params.layers.size() != 3) throw std::invalid_argument("tiny_predict: expected 3 layers");
    if (params.layers[0].c_in != 2 + params.embed_dim)
        throw std::invalid_argument("tiny_predict: input channel count mismatch");

    const Dims d = dims_of(x_t.spec);
    const int in_c = 2 + params.embed_dim;

    DenseTensor input({in_c, d.nz, d.ny, d.nx});
    std::copy(x_t.values.begin(), x_t.values.end(), input.data.begin());
    for (long i = 0; i < d.nvox; ++i) input.data[d.nvox + i] = mask.bits[i] ? 1.0 : 0.0;
    std::vector<double> emb = time_embedding(t, params.embed_dim, params.T);
    for (int e = 0; e < params.embed_dim; ++e)
        std::fill_n(input.data.begin() + static_cast<size_t>(2 + e) * d.nvox, d.nvox, emb[e]);

    DenseTensor a1({params.layers[0].c_out, d.nz, d.ny, d.nx});
    conv_forward(input, params.layers[0], d, a1);
    for (double& v : a1.data) v = v > 0.0 ? v : 0.0;

    DenseTensor a2({params.layers[1].c_out, d.nz, d.ny, d.nx});
    conv_forward(a1, params.layers[1], d, a2);
    for (double& v : a2.data) v = v > 0.0 ? v : 0.0;

    DenseTensor z3({params.layers[2].c_out, d.nz, d.ny, d.nx});
    conv_forward(a2, params.layers[2], d, z3);

    OccupancyGrid out(x_t.spec);
    for (long i = 0; i < d.nvox; ++i) out.values[i] = logistic(z3.data[i]);

    if (cache) {
        cache->spec = x_t.spec;
        cache->t = t;
        cache->acts.clear();
        cache->acts.push_back(std::move(input));
        cache->acts.push_back(std::move(a1));
        cache->acts.push_back(std::move(a2));
        cache->probs = out.values;
    }
    return out;
}

std::vector<double> tiny_backward(const TinyDenoiserParams& params, const ForwardCache& cache,
                                  const std::vector<double>& upstream) {
    if (!cache.valid()) throw std::invalid_argument("tiny_backward: forward cache missing");
    const Dims d = dims_of(cache.spec);
    if (upstream.size() != static_cast<size_t>(d.nvox))
        throw std::invalid_argument("tiny_backward: upstream size mismatch");

    // logistic output: dL/dz = dL/dp * p * (1-p)
    DenseTensor dz({1, d.nz, d.ny, d.nx});
    for (long i = 0; i < d.nvox; ++i) {
        const double p = cache.probs[i];
        dz.data[i] = upstream[i] * p * (1.0 - p);
    }

    std::vector<std::vector<double>> dws(3), dbs(3);
    for (int l = 2; l >= 0; --l) {
        const ConvLayer& layer = params.layers[l];
        conv_backward_params(cache.acts[l], dz, layer, d, dws[l], dbs[l]);
        if (l > 0) {
            DenseTensor din({layer.c_in, d.nz, d.ny, d.nx});
            conv_backward_input(dz, layer, d, din);
            // rectifier gate: post-activation cached, zero stays zero
            const DenseTensor& act = cache.acts[l];
            for (size_t i = 0; i < din.data.size(); ++i)
                if (act.data[i] <= 0.0) din.data[i] = 0.0;
            dz = std::move(din);
        }
    }

    std::vector<double> flat;
    flat.reserve(params.param_count());
    for (int l = 0; l < 3; ++l) {
        flat.insert(flat.end(), dws[l].begin(), dws[l].end());
        flat.insert(flat.end(), dbs[l].begin(), dbs[l].end());
    }
    return flat;
}

void adam_step(TinyDenoiserParams& params, const std::vector<double>& grads, double lr,
               double beta1, double beta2, double eps) {
    const size_t n = params.param_count();
    if (grads.size() != n) throw std::invalid_argument("adam_step: gradient size mismatch");
    if (params.adam_m.size() != n || params.adam_v.size() != n)
        throw std::invalid_argument("adam_step: moment buffers not allocated");
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient at index " +
                                     std::to_string(i));

    std::vector<double> flat = params.flatten();
    params.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(params.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(params.step));
    for (size_t i = 0; i < n; ++i) {
        params.adam_m[i] = beta1 * params.adam_m[i] + (1.0 - beta1) * grads[i];
        params.adam_v[i] = beta2 * params.adam_v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double mhat = params.adam_m[i] / bc1;
        const double vhat = params.adam_v[i] / bc2;
        flat[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    params.unflatten(flat);
}

void write_checkpoint(const std::string& base_path, const TinyDenoiserParams& params) {
    nlohmann::json arch = nlohmann::json::array();
    for (const ConvLayer& l : params.layers)
        arch.push_back({{"c_in", l.c_in}, {"c_out", l.c_out}, {"kernel", 3}});
    nlohmann::json j = {{"embed_dim", params.embed_dim}, {"hidden", params.hidden},
                        {"T", params.T},                 {"step", params.step},
                        {"seed", params.seed},           {"layers", arch},
                        {"dtype", "f32"}};
    std::ofstream jf(base_path + ".ckpt.json");
    if (!jf) throw std::runtime_error("cannot open for write: " + base_path + ".ckpt.json");
    jf << j.dump(2) << "\n";

    std::vector<double> flat = params.flatten();
    std::vector<float> f32;
    f32.reserve(flat.size() * 3);
    for (double v : flat) f32.push_back(static_cast<float>(v));
    for (double v : params.adam_m) f32.push_back(static_cast<float>(v));
    for (double v : params.adam_v) f32.push_back(static_cast<float>(v));

    std::ofstream bf(base_path + ".ckpt.bin", std::ios::binary);
    if (!bf) throw std::runtime_error("cannot open for write: " + base_path + ".ckpt.bin");
    bf.write(reinterpret_cast<const char*>(f32.data()),
             static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (!bf) throw std::runtime_error("write failed: " + base_path + ".ckpt.bin");
}

TinyDenoiserParams read_checkpoint(const std::string& base_path) {
    std::ifstream jf(base_path + ".ckpt.json");
    if (!jf) throw std::runtime_error("cannot open: " + base_path + ".ckpt.json");
    nlohmann::json j;
    jf >> j;

    TinyDenoiserParams p;
    p.embed_dim = j.at("embed_dim").get<int>();
    p.hidden = j.at("hidden").get<int>();
    p.T = j.at("T").get<int>();
    p.step = j.at("step").get<long>();
    p.seed = j.at("seed").get<uint64_t>();
    for (const auto& l : j.at("layers")) {
        ConvLayer layer;
        layer.c_in = l.at("c_in").get<int>();
        layer.c_out = l.at("c_out").get<int>();
        layer.w.resize(static_cast<size_t>(layer.c_out) * layer.c_in * 27);
        layer.b.resize(layer.c_out);
        p.layers.push_back(std::move(layer));
    }

    const size_t n = p.param_count();
    std::ifstream bf(base_path + ".ckpt.bin", std::ios::binary | std::ios::ate);
    if (!bf) throw std::runtime_error("cannot open: " + base_path + ".ckpt.bin");
    const size_t bytes = static_cast<size_t>(bf.tellg());
    if (bytes != n * 3 * sizeof(float))
        throw std::runtime_error(base_path + ".ckpt.bin: expected " +
                                 std::to_string(n * 3 * sizeof(float)) + " bytes, found " +
                                 std::to_string(bytes));
    std::vector<float> f32(n * 3);
    bf.seekg(0);
    bf.read(reinterpret_cast<char*>(f32.data()), static_cast<std::streamsize>(bytes));
    if (!bf) throw std::runtime_error("read failed: " + base_path + ".ckpt.bin");

    std::vector<double> flat(f32.begin(), f32.begin() + n);
    p.unflatten(flat);
    p.adam_m.assign(f32.begin() + n, f32.begin() + 2 * n);
    p.adam_v.assign(f32.begin() + 2 * n, f32.end());
    return p;
}

}  // namespace realdiff
