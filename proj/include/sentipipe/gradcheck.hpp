#pragma once

#include <limits>
#include <span>

#include "sentipipe/mat.hpp"

namespace sentipipe {

// Central-difference check of an analytic gradient. `loss` re-evaluates the
// objective at the current parameter values; `params` is mutated in place and
// restored coordinate by coordinate. Returns the max over coordinates of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|); a non-finite loss
// reports as infinity.
template <class T, class F>
T grad_check(F&& loss, std::span<T> params, std::span<const T> analytic, T eps) {
    check(eps > T(0), "grad_check: eps must be positive");
    check(params.size() == analytic.size(), "grad_check: gradient size mismatch");
    T max_rel = T(0);
    for (size_t i = 0; i < params.size(); ++i) {
        const T w0 = params[i];
        params[i] = w0 + eps;
        const T fp = loss();
        params[i] = w0 - eps;
        const T fm = loss();
        params[i] = w0;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            return std::numeric_limits<T>::infinity();
        const T numeric = (fp - fm) / (T(2) * eps);
        const T denom = std::max(T(1e-8), std::abs(analytic[i]) + std::abs(numeric));
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace sentipipe
