#pragma once

#include <string>
#include <vector>

#include "core/checkpoint.hpp"

namespace trimix {

// ============================================================
// Adam over the requires_grad entries of a parameter dict
// ============================================================
//
// Moment buffers key off entry names; iteration order is the dict order, so
// updates are deterministic. step() consumes the accumulated grads and
// leaves them in place; callers zero them afterwards.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(TensorDict& params);
    void zero_grads(TensorDict& params);
    int64_t steps_taken() const { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
    TensorDict m_, v_;
};

} // namespace trimix
