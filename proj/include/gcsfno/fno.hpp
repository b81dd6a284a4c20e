#ifndef GCSFNO_FNO_HPP
#define GCSFNO_FNO_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gcsfno/layers.hpp"
#include "gcsfno/spectral_conv.hpp"

namespace gcsfno {

/// Network shape: a channel lift, four Fourier layers (spectral convolution
/// plus a pointwise bypass, LeakyReLU), then a two-stage projection head
/// (hidden layer with ReLU, linear output). Lift and output carry no
/// activation.
struct FnoArch {
    std::size_t in_channels = 5;
    std::size_t out_channels = 1;
    std::size_t width = 32;
    std::size_t n_fourier_layers = 4;
    std::size_t modes_x = 12;
    std::size_t modes_z = 12;
    std::size_t fc2_width = 128;
    bool fourier_bias = true;

    void validate() const {
        if (in_channels == 0 || out_channels == 0 || width == 0 || fc2_width == 0)
            throw ConfigError("fno arch: channel counts and widths must be positive");
        if (n_fourier_layers != 4)
            throw ConfigError("fno arch: exactly four Fourier layers are supported");
        if (modes_x == 0 || modes_z == 0)
            throw ConfigError("fno arch: retained mode counts must be positive");
    }

    bool operator==(const FnoArch&) const = default;
};

template <typename T>
struct FourierLayerParams {
    Tensor<T> r;  // spectral mixing weights [width, width, 2mx, 2mz, 2]
    Tensor<T> w;  // pointwise bypass [width, width]
    Tensor<T> b;  // [width]
};

template <typename T>
struct FnoParams {
    FnoArch arch;
    Tensor<T> fc1_w, fc1_b;
    std::vector<FourierLayerParams<T>> layers;
    Tensor<T> fc2_w, fc2_b;
    Tensor<T> fc3_w, fc3_b;

    /// Every tensor in its fixed serialization order:
    /// fc1.w, fc1.b, {layer_l.r, layer_l.w, layer_l.b} for l = 0..3,
    /// fc2.w, fc2.b, fc3.w, fc3.b.
    std::vector<Tensor<T>*> tensors() {
        std::vector<Tensor<T>*> out{&fc1_w, &fc1_b};
        for (auto& l : layers) {
            out.push_back(&l.r);
            out.push_back(&l.w);
            out.push_back(&l.b);
        }
        out.insert(out.end(), {&fc2_w, &fc2_b, &fc3_w, &fc3_b});
        return out;
    }
    std::vector<const Tensor<T>*> tensors() const {
        auto mut = const_cast<FnoParams*>(this)->tensors();
        return {mut.begin(), mut.end()};
    }
    std::vector<std::string> tensor_names() const {
        std::vector<std::string> out{"fc1.w", "fc1.b"};
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "fourier" + std::to_string(l + 1) + ".";
            out.insert(out.end(), {p + "r", p + "w", p + "b"});
        }
        out.insert(out.end(), {"fc2.w", "fc2.b", "fc3.w", "fc3.b"});
        return out;
    }
};

/// Zero-valued parameter set with the shapes the arch dictates.
template <typename T>
FnoParams<T> fno_zeros(const FnoArch& arch) {
    arch.validate();
    FnoParams<T> p;
    p.arch = arch;
    const std::size_t w = arch.width, mx = arch.modes_x, mz = arch.modes_z;
    p.fc1_w = Tensor<T>({w, arch.in_channels});
    p.fc1_b = Tensor<T>({w});
    p.layers.resize(arch.n_fourier_layers);
    for (auto& l : p.layers) {
        l.r = Tensor<T>({w, w, 2 * mx, 2 * mz, 2});
        l.w = Tensor<T>({w, w});
        l.b = Tensor<T>({w});
    }
    p.fc2_w = Tensor<T>({arch.fc2_width, w});
    p.fc2_b = Tensor<T>({arch.fc2_width});
    p.fc3_w = Tensor<T>({arch.out_channels, arch.fc2_width});
    p.fc3_b = Tensor<T>({arch.out_channels});
    return p;
}

namespace detail {

// Platform-independent uniform [0, 1) from the raw engine stream.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Deterministic initialization: dense weights uniform in +-sqrt(1/fan_in),
/// spectral weights with re/im uniform in [0, 1/(c_in*c_out)), biases zero.
template <typename T>
FnoParams<T> fno_init(const FnoArch& arch, std::uint64_t seed) {
    FnoParams<T> p = fno_zeros<T>(arch);
    std::mt19937_64 rng(seed);
    auto fill_dense = [&](Tensor<T>& w) {
        const double bound = std::sqrt(1.0 / static_cast<double>(w.shape[1]));
        for (T& v : w.data)
            v = static_cast<T>((2.0 * detail::uniform01(rng) - 1.0) * bound);
    };
    auto fill_spectral = [&](Tensor<T>& r) {
        const double scale = 1.0 / static_cast<double>(r.shape[0] * r.shape[1]);
        for (T& v : r.data) v = static_cast<T>(detail::uniform01(rng) * scale);
    };
    fill_dense(p.fc1_w);
    for (auto& l : p.layers) {
        fill_spectral(l.r);
        fill_dense(l.w);
    }
    fill_dense(p.fc2_w);
    fill_dense(p.fc3_w);
    return p;
}

/// Saved activations for one forward pass; consumed by exactly one backward.
template <typename T>
struct FnoCache {
    bool valid = false;
    std::size_t nx = 0, nz = 0;
    DenseCtx<T> fc1;
    struct LayerCache {
        SpectralCtx<T> spec;
        DenseCtx<T> bypass;
        Tensor<T> pre;  // pre-activation sum
    };
    std::vector<LayerCache> layers;
    DenseCtx<T> fc2;
    Tensor<T> fc2_pre;
    DenseCtx<T> fc3;
};

template <typename T>
Tensor<T> fno_forward(const FnoParams<T>& params, const Tensor<T>& x,
                      FnoCache<T>* cache = nullptr) {
    const FnoArch& arch = params.arch;
    if (x.shape.size() != 3 || x.shape[0] != arch.in_channels)
        throw ContractError("fno_forward: input must be [in_channels, nx, nz]");
    const std::size_t nx = x.shape[1], nz = x.shape[2];

    if (cache) {
        cache->valid = false;
        cache->nx = nx;
        cache->nz = nz;
        cache->layers.assign(arch.n_fourier_layers, {});
    }

    Tensor<T> v = dense_forward(x, params.fc1_w, params.fc1_b, cache ? &cache->fc1 : nullptr);
    for (std::size_t l = 0; l < arch.n_fourier_layers; ++l) {
        auto* lc = cache ? &cache->layers[l] : nullptr;
        Tensor<T> spec = spectral_conv_forward(v, params.layers[l].r, arch.modes_x, arch.modes_z,
                                               lc ? &lc->spec : nullptr);
        Tensor<T> pre = dense_forward(v, params.layers[l].w, params.layers[l].b,
                                      lc ? &lc->bypass : nullptr);
        for (std::size_t i = 0; i < pre.size(); ++i) pre.data[i] += spec.data[i];
        if (lc) lc->pre = pre;
        v = leaky_relu(pre, T(0.01));
    }
    Tensor<T> h = dense_forward(v, params.fc2_w, params.fc2_b, cache ? &cache->fc2 : nullptr);
    if (cache) cache->fc2_pre = h;
    Tensor<T> hr = relu(h);
    Tensor<T> yhat = dense_forward(hr, params.fc3_w, params.fc3_b, cache ? &cache->fc3 : nullptr);
    if (!yhat.all_finite()) throw NumericError("fno_forward: non-finite output");
    if (cache) cache->valid = true;
    return yhat;
}

/// Reverse pass. Returns gradients in a parameter-shaped container and
/// optionally the gradient w.r.t. the input. The cache is consumed: a second
/// backward on the same cache is a contract violation.
template <typename T>
FnoParams<T> fno_backward(const FnoParams<T>& params, FnoCache<T>& cache,
                          const Tensor<T>& grad_yhat, Tensor<T>* grad_x = nullptr) {
    const FnoArch& arch = params.arch;
    if (!cache.valid) throw ContractError("fno_backward: cache is stale or already consumed");
    if (grad_yhat.shape.size() != 3 || grad_yhat.shape[0] != arch.out_channels ||
        grad_yhat.shape[1] != cache.nx || grad_yhat.shape[2] != cache.nz)
        throw ContractError("fno_backward: upstream gradient shape mismatch");
    cache.valid = false;

    FnoParams<T> g = fno_zeros<T>(arch);
    Tensor<T> g_hr, g_h, g_v;

    dense_backward(cache.fc3, params.fc3_w, grad_yhat, g_hr, g.fc3_w, g.fc3_b);
    g_h = relu_backward(cache.fc2_pre, g_hr);
    dense_backward(cache.fc2, params.fc2_w, g_h, g_v, g.fc2_w, g.fc2_b);

    for (std::size_t l = arch.n_fourier_layers; l-- > 0;) {
        auto& lc = cache.layers[l];
        Tensor<T> g_pre = leaky_relu_backward(lc.pre, g_v, T(0.01));
        Tensor<T> g_spec_in({arch.width, cache.nx, cache.nz});
        spectral_conv_backward(lc.spec, params.layers[l].r, g_pre, &g_spec_in, &g.layers[l].r);
        Tensor<T> g_bypass_in;
        dense_backward(lc.bypass, params.layers[l].w, g_pre, g_bypass_in, g.layers[l].w,
                       g.layers[l].b);
        for (std::size_t i = 0; i < g_spec_in.size(); ++i)
            g_spec_in.data[i] += g_bypass_in.data[i];
        g_v = std::move(g_spec_in);
    }

    Tensor<T> g_x;
    dense_backward(cache.fc1, params.fc1_w, g_v, g_x, g.fc1_w, g.fc1_b);
    if (grad_x) *grad_x = std::move(g_x);
    return g;
}

}  // namespace gcsfno

#endif
