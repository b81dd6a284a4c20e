#ifndef GCSFNO_GRAD_CHECK_HPP
#define GCSFNO_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gcsfno/tensor.hpp"

namespace gcsfno {

/// Compares analytic gradients against central finite differences of a
/// scalar-valued function over every element of every listed tensor.
/// For each tensor the error is the largest elementwise deviation divided
/// by the tensor's gradient magnitude (so roundoff on near-zero components
/// is judged against the scale of the whole gradient, not against itself);
/// the return value is the worst ratio across tensors. `f` is evaluated
/// with the tensors in their (temporarily perturbed) current state;
/// `analytic[k]` must hold d f / d inputs[k]. Meant for f64.
template <typename T, typename Scalar>
double grad_check(Scalar f, const std::vector<Tensor<T>*>& inputs,
                  const std::vector<const Tensor<T>*>& analytic, T eps = T(1e-6)) {
    if (inputs.size() != analytic.size())
        throw ContractError("grad_check: inputs/analytic count mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor<T>& x = *inputs[k];
        const Tensor<T>& g = *analytic[k];
        if (!x.same_shape(g)) throw ContractError("grad_check: analytic gradient shape mismatch");
        double max_dev = 0.0, scale = 1e-8;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const T saved = x.data[i];
            x.data[i] = saved + eps;
            const double fp = static_cast<double>(f());
            x.data[i] = saved - eps;
            const double fm = static_cast<double>(f());
            x.data[i] = saved;
            const double fd = (fp - fm) / (2.0 * static_cast<double>(eps));
            const double an = static_cast<double>(g.data[i]);
            max_dev = std::max(max_dev, std::abs(fd - an));
            scale = std::max({scale, std::abs(fd), std::abs(an)});
        }
        worst = std::max(worst, max_dev / scale);
    }
    return worst;
}

}  // namespace gcsfno

#endif
