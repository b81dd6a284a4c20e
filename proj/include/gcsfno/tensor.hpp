#ifndef GCSFNO_TENSOR_HPP
#define GCSFNO_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "gcsfno/errors.hpp"

namespace gcsfno {

/// Dense row-major tensor (last axis fastest). Feature images use the
/// axis order [channels, nx, nz].
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(count(shape), T(0));
    }

    static Tensor zeros(std::initializer_list<std::size_t> s) {
        return Tensor(std::vector<std::size_t>(s));
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1},
                               std::multiplies<std::size_t>());
    }

    std::size_t size() const { return data.size(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    // Index helpers for the common ranks.
    std::size_t idx2(std::size_t i, std::size_t j) const { return i * shape[1] + j; }
    std::size_t idx3(std::size_t c, std::size_t ix, std::size_t iz) const {
        return (c * shape[1] + ix) * shape[2] + iz;
    }

    T& at3(std::size_t c, std::size_t ix, std::size_t iz) { return data[idx3(c, ix, iz)]; }
    const T& at3(std::size_t c, std::size_t ix, std::size_t iz) const {
        return data[idx3(c, ix, iz)];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw ContractError(std::string(where) + ": tensor shape mismatch");
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace gcsfno

#endif
