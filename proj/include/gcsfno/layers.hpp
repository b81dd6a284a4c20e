#ifndef GCSFNO_LAYERS_HPP
#define GCSFNO_LAYERS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <utility>

#include "gcsfno/tensor.hpp"

namespace gcsfno {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Cached input for one dense layer application; consumed by the backward
/// pass of exactly that application.
template <typename T>
struct DenseCtx {
    Tensor<T> x;  // input copy [c_in, npix]
};

/// Pointwise channel mixing: at every pixel, y = w*x + b.
/// x: [c_in, nx, nz] (or any [c_in, ...spatial]), w: [c_out, c_in], b: [c_out].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                        DenseCtx<T>* ctx = nullptr) {
    if (x.shape.empty() || w.shape.size() != 2 || b.shape.size() != 1)
        throw ContractError("dense_forward: bad ranks");
    const std::size_t c_in = x.shape[0];
    const std::size_t c_out = w.shape[0];
    if (w.shape[1] != c_in || b.shape[0] != c_out)
        throw ContractError("dense_forward: channel counts do not conform");
    const std::size_t npix = x.size() / c_in;

    std::vector<std::size_t> out_shape = x.shape;
    out_shape[0] = c_out;
    Tensor<T> y(out_shape);

    ConstMatMap<T> xm(x.data.data(), c_in, npix);
    ConstMatMap<T> wm(w.data.data(), c_out, c_in);
    MatMap<T> ym(y.data.data(), c_out, npix);
    ym.noalias() = wm * xm;
    for (std::size_t co = 0; co < c_out; ++co) ym.row(co).array() += b.data[co];

    if (ctx) ctx->x = x;
    return y;
}

/// Gradients by the transpose relations: dx = w^T g, dw = g x^T, db = sum_p g.
template <typename T>
void dense_backward(const DenseCtx<T>& ctx, const Tensor<T>& w, const Tensor<T>& grad_y,
                    Tensor<T>& grad_x, Tensor<T>& grad_w, Tensor<T>& grad_b) {
    const std::size_t c_in = ctx.x.shape[0];
    const std::size_t c_out = w.shape[0];
    const std::size_t npix = ctx.x.size() / c_in;
    if (grad_y.shape[0] != c_out || grad_y.size() != c_out * npix)
        throw ContractError("dense_backward: upstream gradient shape mismatch");

    grad_x = Tensor<T>(ctx.x.shape);
    grad_w = Tensor<T>(w.shape);
    grad_b = Tensor<T>({c_out});

    ConstMatMap<T> xm(ctx.x.data.data(), c_in, npix);
    ConstMatMap<T> wm(w.data.data(), c_out, c_in);
    ConstMatMap<T> gm(grad_y.data.data(), c_out, npix);
    MatMap<T> gxm(grad_x.data.data(), c_in, npix);
    MatMap<T> gwm(grad_w.data.data(), c_out, c_in);
    gxm.noalias() = wm.transpose() * gm;
    gwm.noalias() = gm * xm.transpose();
    for (std::size_t co = 0; co < c_out; ++co) grad_b.data[co] = gm.row(co).sum();
}

/// Elementwise x if x >= 0 else slope*x. Subgradient 1 at 0.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.01)) {
    Tensor<T> y = x;
    for (T& v : y.data)
        if (v < T(0)) v *= slope;
    return y;
}

/// Backward multiplies upstream by 1 or slope based on the cached input.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_y, T slope = T(0.01)) {
    require_same_shape(x, grad_y, "leaky_relu_backward");
    Tensor<T> gx = grad_y;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x.data[i] < T(0)) gx.data[i] *= slope;
    return gx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return leaky_relu(x, T(0));
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_y) {
    return leaky_relu_backward(x, grad_y, T(0));
}

/// Root-mean-square error and its gradient w.r.t. the prediction.
/// grad = (yhat - y) / (N * max(loss, eps)); the eps guard keeps the
/// zero-loss gradient finite.
template <typename T>
std::pair<T, Tensor<T>> rmse_loss(const Tensor<T>& y, const Tensor<T>& yhat) {
    require_same_shape(y, yhat, "rmse_loss");
    const std::size_t n = y.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(yhat.data[i]) - static_cast<double>(y.data[i]);
        acc += d * d;
    }
    const double loss = std::sqrt(acc / static_cast<double>(n));
    const double denom = static_cast<double>(n) * std::max(loss, 1e-12);
    Tensor<T> grad(y.shape);
    for (std::size_t i = 0; i < n; ++i)
        grad.data[i] = static_cast<T>(
            (static_cast<double>(yhat.data[i]) - static_cast<double>(y.data[i])) / denom);
    return {static_cast<T>(loss), std::move(grad)};
}

}  // namespace gcsfno

#endif
