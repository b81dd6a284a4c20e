#ifndef GCSFNO_FFT_HPP
#define GCSFNO_FFT_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <vector>

#include "gcsfno/errors.hpp"

namespace gcsfno {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline void require_pow2(std::size_t nx, std::size_t nz, const char* where) {
    if (!is_pow2(nx) || !is_pow2(nz))
        throw ConfigError(std::string(where) + ": grid extents must be powers of two, got " +
                          std::to_string(nx) + "x" + std::to_string(nz));
}

namespace detail {

// Forward twiddles e^{-2*pi*i*k/n} for k in [0, n/2), cached per length.
// Twiddles are computed in double and narrowed, so float transforms agree
// with the double path to f32 rounding.
template <typename T>
const std::vector<std::complex<T>>& twiddles(std::size_t n) {
    static thread_local std::map<std::size_t, std::vector<std::complex<T>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<T>> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        w[k] = std::complex<T>(static_cast<T>(std::cos(ang)), static_cast<T>(std::sin(ang)));
    }
    return cache.emplace(n, std::move(w)).first->second;
}

template <typename T>
void bit_reverse_permute(std::complex<T>* z, std::size_t n) {
    std::size_t j = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (i < j) std::swap(z[i], z[j]);
        std::size_t mask = n >> 1;
        while (j & mask) {
            j ^= mask;
            mask >>= 1;
        }
        j |= mask;
    }
}

}  // namespace detail

/// In-place iterative radix-2 transform of a contiguous length-n buffer.
/// Forward is unnormalized; inverse applies the 1/n factor. The butterflies
/// spell out the real/imaginary arithmetic: for finite inputs this matches
/// std::complex multiplication bit for bit while avoiding its out-of-line
/// NaN-handling path, which otherwise dominates the runtime.
template <typename T>
void fft_1d(std::complex<T>* z, std::size_t n, bool inverse) {
    if (n == 1) return;
    detail::bit_reverse_permute(z, n);
    const auto& w = detail::twiddles<T>(n);
    // z is contiguous (re, im) pairs; std::complex guarantees this layout.
    T* d = reinterpret_cast<T*>(z);
    const T conj_sign = inverse ? T(-1) : T(1);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t tstep = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const T twr = w[k * tstep].real();
                const T twi = conj_sign * w[k * tstep].imag();
                const std::size_t a = 2 * (start + k), b = 2 * (start + k + half);
                const T er = d[a], ei = d[a + 1];
                const T zr = d[b], zi = d[b + 1];
                const T or_ = zr * twr - zi * twi;
                const T oi = zr * twi + zi * twr;
                d[a] = er + or_;
                d[a + 1] = ei + oi;
                d[b] = er - or_;
                d[b + 1] = ei - oi;
            }
        }
    }
    if (inverse) {
        const T scale = T(1) / static_cast<T>(n);
        for (std::size_t i = 0; i < 2 * n; ++i) d[i] *= scale;
    }
}

/// In-place 2D transform of an nx x nz buffer stored row-major with z
/// fastest (index ix*nz + iz). Forward unnormalized, inverse carries the
/// full 1/(nx*nz) factor.
template <typename T>
void fft_2d(std::complex<T>* z, std::size_t nx, std::size_t nz, bool inverse) {
    require_pow2(nx, nz, "fft_2d");
    for (std::size_t ix = 0; ix < nx; ++ix) fft_1d(z + ix * nz, nz, inverse);
    // x-lines are strided; gather into a scratch row.
    static thread_local std::vector<std::complex<T>> line;
    line.resize(nx);
    for (std::size_t iz = 0; iz < nz; ++iz) {
        for (std::size_t ix = 0; ix < nx; ++ix) line[ix] = z[ix * nz + iz];
        fft_1d(line.data(), nx, inverse);
        for (std::size_t ix = 0; ix < nx; ++ix) z[ix * nz + iz] = line[ix];
    }
}

/// Forward 2D DFT of a real field (z-fastest layout).
template <typename T>
std::vector<std::complex<T>> fft2(const T* field, std::size_t nx, std::size_t nz) {
    std::vector<std::complex<T>> z(nx * nz);
    for (std::size_t i = 0; i < nx * nz; ++i) z[i] = std::complex<T>(field[i], T(0));
    fft_2d(z.data(), nx, nz, false);
    return z;
}

template <typename T>
std::vector<std::complex<T>> ifft2(std::vector<std::complex<T>> coeffs, std::size_t nx,
                                   std::size_t nz) {
    fft_2d(coeffs.data(), nx, nz, true);
    return coeffs;
}

}  // namespace gcsfno

#endif
