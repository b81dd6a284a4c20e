#ifndef GCSFNO_ADAM_HPP
#define GCSFNO_ADAM_HPP

#include <cmath>
#include <string>
#include <vector>

#include "gcsfno/tensor.hpp"

namespace gcsfno {

/// First/second moment accumulators for one parameter set.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    long step_count = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    template <typename ParamPtrs>
    static AdamState init(const ParamPtrs& params) {
        AdamState s;
        for (const auto* p : params) {
            s.m.emplace_back(p->shape);
            s.v.emplace_back(p->shape);
        }
        return s;
    }
};

/// One bias-corrected Adam update. `names` is used only for error
/// reporting when a gradient is non-finite.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, T lr, const std::vector<std::string>& names = {}) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ContractError("adam_step: parameter/gradient/state count mismatch");
    if (!(lr > T(0))) throw ContractError("adam_step: lr must be positive");

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), t);
    const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), t);

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<T>& p = *params[k];
        const Tensor<T>& g = *grads[k];
        if (!p.same_shape(g)) throw ContractError("adam_step: gradient shape mismatch");
        if (!g.all_finite()) {
            const std::string name = k < names.size() ? names[k] : ("#" + std::to_string(k));
            throw NumericError("adam_step: non-finite gradient for tensor '" + name + "'");
        }
        Tensor<T>& m = state.m[k];
        Tensor<T>& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const T gi = g.data[i];
            m.data[i] = state.beta1 * m.data[i] + (T(1) - state.beta1) * gi;
            v.data[i] = state.beta2 * v.data[i] + (T(1) - state.beta2) * gi * gi;
            const T mhat = m.data[i] / static_cast<T>(bc1);
            const T vhat = v.data[i] / static_cast<T>(bc2);
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace gcsfno

#endif
