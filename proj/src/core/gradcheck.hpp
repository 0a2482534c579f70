#pragma once

#include <functional>

#include "core/tensor.hpp"

namespace trimix {

// Numerical gradient verification for a scalar-valued differentiable
// function. f must be pure: it is re-evaluated ~2*numel(x) times with
// perturbed copies of x. Returns
//   max_i |g_fd[i] - g_ad[i]| / max(1, |g_fd[i]|)
// where g_fd uses central differences with step eps.
template <typename T>
double grad_check(const std::function<TensorT<T>(Tape<T>&, const TensorT<T>&)>& f,
                  const TensorT<T>& x, double eps);

} // namespace trimix
