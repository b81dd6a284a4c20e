#ifndef GCSFNO_SPECTRAL_CONV_HPP
#define GCSFNO_SPECTRAL_CONV_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include "gcsfno/errors.hpp"
#include "gcsfno/fft.hpp"
#include "gcsfno/tensor.hpp"

namespace gcsfno {

// Spectral convolution on a 2D periodic grid. The input is transformed with a
// full complex FFT per channel, the four low-frequency corner blocks
// (modes_x x modes_z each) are mixed across channels by complex weights, all
// other coefficients are dropped, and the result is transformed back; the real
// part is the output. Weights live in a real tensor of shape
// [c_out, c_in, 2*modes_x, 2*modes_z, 2], last axis = (re, im), so optimizers
// can treat them like any other parameter.

/// Maps a retained-mode row index r in [0, 2m) to the FFT bin it refers to:
/// the first m rows are the low positive frequencies, the last m rows the
/// low negative ones.
inline std::size_t mode_bin(std::size_t r, std::size_t m, std::size_t n) {
    return r < m ? r : n - 2 * m + r;
}

template <typename T>
struct SpectralCtx {
    std::size_t c_in = 0, nx = 0, nz = 0;
    std::size_t modes_x = 0, modes_z = 0;
    std::vector<std::complex<T>> v_hat;  // retained input spectra [c_in][2m_x][2m_z]
};

namespace detail {

// Forward 2D transform of a dense grid, but with the second (x-direction)
// pass run only for the retained kz columns; every other column is left
// untransformed and must not be read. Matches fft_2d bit for bit at the
// retained bins.
template <typename T>
void forward_transform_retained_cols(std::complex<T>* z, std::size_t nx, std::size_t nz,
                                     std::size_t modes_z) {
    for (std::size_t ix = 0; ix < nx; ++ix) fft_1d(z + ix * nz, nz, false);
    static thread_local std::vector<std::complex<T>> line;
    line.resize(nx);
    const std::size_t mz2 = 2 * modes_z;
    for (std::size_t rz = 0; rz < mz2; ++rz) {
        const std::size_t kz = mode_bin(rz, modes_z, nz);
        for (std::size_t ix = 0; ix < nx; ++ix) line[ix] = z[ix * nz + kz];
        fft_1d(line.data(), nx, false);
        for (std::size_t ix = 0; ix < nx; ++ix) z[ix * nz + kz] = line[ix];
    }
}

// Inverse 2D transform of a grid whose only nonzero coefficients sit in the
// retained kx rows: the first (z-direction) pass skips the rows that hold
// nothing but zeros, which an inverse transform would map to zeros anyway.
template <typename T>
void inverse_transform_sparse_rows(std::complex<T>* z, std::size_t nx, std::size_t nz,
                                   std::size_t modes_x) {
    const std::size_t mx2 = 2 * modes_x;
    for (std::size_t rx = 0; rx < mx2; ++rx) {
        const std::size_t kx = mode_bin(rx, modes_x, nx);
        fft_1d(z + kx * nz, nz, true);
    }
    static thread_local std::vector<std::complex<T>> line;
    line.resize(nx);
    for (std::size_t iz = 0; iz < nz; ++iz) {
        for (std::size_t ix = 0; ix < nx; ++ix) line[ix] = z[ix * nz + iz];
        fft_1d(line.data(), nx, true);
        for (std::size_t ix = 0; ix < nx; ++ix) z[ix * nz + iz] = line[ix];
    }
}

template <typename T>
inline void check_spectral_shapes(const Tensor<T>& x, const Tensor<T>& r,
                                  std::size_t modes_x, std::size_t modes_z) {
    if (x.shape.size() != 3) throw ContractError("spectral_conv: input must be [c, nx, nz]");
    if (r.shape.size() != 5 || r.shape[4] != 2)
        throw ContractError("spectral_conv: weights must be [c_out, c_in, 2mx, 2mz, 2]");
    if (r.shape[1] != x.shape[0])
        throw ContractError("spectral_conv: weight c_in does not match input channels");
    if (r.shape[2] != 2 * modes_x || r.shape[3] != 2 * modes_z)
        throw ContractError("spectral_conv: weight mode extents do not match modes_x/modes_z");
    const std::size_t nx = x.shape[1], nz = x.shape[2];
    require_pow2(nx, nz, "spectral_conv");
    if (modes_x == 0 || modes_z == 0 || 2 * modes_x > nx || 2 * modes_z > nz)
        throw ConfigError("spectral_conv: retained modes must satisfy 0 < 2*modes <= grid extent");
}

}  // namespace detail

template <typename T>
Tensor<T> spectral_conv_forward(const Tensor<T>& x, const Tensor<T>& r, std::size_t modes_x,
                                std::size_t modes_z, SpectralCtx<T>* ctx = nullptr) {
    detail::check_spectral_shapes(x, r, modes_x, modes_z);
    const std::size_t c_in = x.shape[0], nx = x.shape[1], nz = x.shape[2];
    const std::size_t c_out = r.shape[0];
    const std::size_t mx2 = 2 * modes_x, mz2 = 2 * modes_z;
    const std::size_t n_modes = mx2 * mz2;

    thread_local std::vector<std::complex<T>> grid;
    grid.assign(nx * nz, std::complex<T>(0));
    thread_local std::vector<std::complex<T>> v_hat;
    v_hat.assign(c_in * n_modes, std::complex<T>(0));

    for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* src = x.data.data() + ci * nx * nz;
        for (std::size_t i = 0; i < nx * nz; ++i) grid[i] = std::complex<T>(src[i], T(0));
        detail::forward_transform_retained_cols(grid.data(), nx, nz, modes_z);
        for (std::size_t rx = 0; rx < mx2; ++rx) {
            const std::size_t kx = mode_bin(rx, modes_x, nx);
            for (std::size_t rz = 0; rz < mz2; ++rz) {
                const std::size_t kz = mode_bin(rz, modes_z, nz);
                v_hat[(ci * mx2 + rx) * mz2 + rz] = grid[kx * nz + kz];
            }
        }
    }

    Tensor<T> y({c_out, nx, nz});
    for (std::size_t co = 0; co < c_out; ++co) {
        grid.assign(nx * nz, std::complex<T>(0));
        for (std::size_t rx = 0; rx < mx2; ++rx) {
            const std::size_t kx = mode_bin(rx, modes_x, nx);
            for (std::size_t rz = 0; rz < mz2; ++rz) {
                const std::size_t kz = mode_bin(rz, modes_z, nz);
                T acc_r = 0, acc_i = 0;
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    const std::size_t wi = (((co * c_in + ci) * mx2 + rx) * mz2 + rz) * 2;
                    const T wr = r.data[wi], wim = r.data[wi + 1];
                    const std::complex<T> v = v_hat[(ci * mx2 + rx) * mz2 + rz];
                    acc_r += wr * v.real() - wim * v.imag();
                    acc_i += wr * v.imag() + wim * v.real();
                }
                grid[kx * nz + kz] = std::complex<T>(acc_r, acc_i);
            }
        }
        detail::inverse_transform_sparse_rows(grid.data(), nx, nz, modes_x);
        T* dst = y.data.data() + co * nx * nz;
        for (std::size_t i = 0; i < nx * nz; ++i) dst[i] = grid[i].real();
    }

    if (ctx) {
        ctx->c_in = c_in;
        ctx->nx = nx;
        ctx->nz = nz;
        ctx->modes_x = modes_x;
        ctx->modes_z = modes_z;
        ctx->v_hat = std::move(v_hat);
    }
    return y;
}

/// Backward pass. grad_y is [c_out, nx, nz]; fills grad_x ([c_in, nx, nz]) and
/// grad_r (same shape as r) when non-null. Gradients are written, not
/// accumulated.
template <typename T>
void spectral_conv_backward(const SpectralCtx<T>& ctx, const Tensor<T>& r, const Tensor<T>& grad_y,
                            Tensor<T>* grad_x, Tensor<T>* grad_r) {
    const std::size_t c_in = ctx.c_in, nx = ctx.nx, nz = ctx.nz;
    const std::size_t modes_x = ctx.modes_x, modes_z = ctx.modes_z;
    const std::size_t mx2 = 2 * modes_x, mz2 = 2 * modes_z;
    const std::size_t n_modes = mx2 * mz2;
    const std::size_t c_out = r.shape[0];
    if (grad_y.shape.size() != 3 || grad_y.shape[0] != c_out || grad_y.shape[1] != nx ||
        grad_y.shape[2] != nz)
        throw ContractError("spectral_conv_backward: grad_y shape mismatch");
    if (ctx.v_hat.size() != c_in * n_modes)
        throw ContractError("spectral_conv_backward: context does not match weights");

    const T inv_n = T(1) / static_cast<T>(nx * nz);
    thread_local std::vector<std::complex<T>> grid;

    // Spectrum of the loss gradient at retained modes, scaled so that it is
    // d loss / d (re, im) of each retained coefficient.
    std::vector<std::complex<T>> g_hat(c_out * n_modes);
    for (std::size_t co = 0; co < c_out; ++co) {
        grid.assign(nx * nz, std::complex<T>(0));
        const T* src = grad_y.data.data() + co * nx * nz;
        for (std::size_t i = 0; i < nx * nz; ++i) grid[i] = std::complex<T>(src[i], T(0));
        detail::forward_transform_retained_cols(grid.data(), nx, nz, modes_z);
        for (std::size_t rx = 0; rx < mx2; ++rx) {
            const std::size_t kx = mode_bin(rx, modes_x, nx);
            for (std::size_t rz = 0; rz < mz2; ++rz) {
                const std::size_t kz = mode_bin(rz, modes_z, nz);
                g_hat[(co * mx2 + rx) * mz2 + rz] = grid[kx * nz + kz] * inv_n;
            }
        }
    }

    if (grad_r) {
        if (!grad_r->same_shape(r)) throw ContractError("spectral_conv_backward: grad_r shape");
        for (std::size_t co = 0; co < c_out; ++co)
            for (std::size_t ci = 0; ci < c_in; ++ci)
                for (std::size_t m = 0; m < n_modes; ++m) {
                    const std::complex<T> g = g_hat[co * n_modes + m];
                    const std::complex<T> v = ctx.v_hat[ci * n_modes + m];
                    const std::size_t wi = ((co * c_in + ci) * n_modes + m) * 2;
                    grad_r->data[wi] = g.real() * v.real() + g.imag() * v.imag();
                    grad_r->data[wi + 1] = g.imag() * v.real() - g.real() * v.imag();
                }
    }

    if (grad_x) {
        if (grad_x->shape.size() != 3 || grad_x->shape[0] != c_in || grad_x->shape[1] != nx ||
            grad_x->shape[2] != nz)
            throw ContractError("spectral_conv_backward: grad_x shape");
        const T n = static_cast<T>(nx * nz);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            grid.assign(nx * nz, std::complex<T>(0));
            for (std::size_t rx = 0; rx < mx2; ++rx) {
                const std::size_t kx = mode_bin(rx, modes_x, nx);
                for (std::size_t rz = 0; rz < mz2; ++rz) {
                    const std::size_t kz = mode_bin(rz, modes_z, nz);
                    const std::size_t m = rx * mz2 + rz;
                    T acc_r = 0, acc_i = 0;
                    for (std::size_t co = 0; co < c_out; ++co) {
                        const std::size_t wi = ((co * c_in + ci) * n_modes + m) * 2;
                        const T wr = r.data[wi], wim = r.data[wi + 1];
                        const std::complex<T> g = g_hat[co * n_modes + m];
                        acc_r += g.real() * wr + g.imag() * wim;
                        acc_i += g.imag() * wr - g.real() * wim;
                    }
                    grid[kx * nz + kz] = std::complex<T>(acc_r, acc_i);
                }
            }
            detail::inverse_transform_sparse_rows(grid.data(), nx, nz, modes_x);
            T* dst = grad_x->data.data() + ci * nx * nz;
            for (std::size_t i = 0; i < nx * nz; ++i) dst[i] = grid[i].real() * n;
        }
    }
}

}  // namespace gcsfno

#endif
