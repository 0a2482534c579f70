#include "train/adam.hpp"

#include <cmath>

#include "core/error.hpp"

namespace trimix {

void Adam::step(TensorDict& params) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        if (!p.requires_grad()) continue;
        if (!p.has_grad()) continue;
        if (!m_.contains(name)) {
            m_.put(name, Tensor::zeros(p.shape()));
            v_.put(name, Tensor::zeros(p.shape()));
        }
        auto& m = m_.at(name);
        auto& v = v_.at(name);
        if (m.shape() != p.shape()) throw ContractError("optimizer state mismatch for " + name);
        const int64_t n = p.numel();
        float* pd = p.data();
        const float* g = p.grad();
        float* md = m.data();
        float* vd = v.data();
        for (int64_t i = 0; i < n; i++) {
            const double gi = g[i];
            md[i] = static_cast<float>(b1_ * md[i] + (1.0 - b1_) * gi);
            vd[i] = static_cast<float>(b2_ * vd[i] + (1.0 - b2_) * gi * gi);
            const double mhat = md[i] / bc1;
            const double vhat = vd[i] / bc2;
            pd[i] = static_cast<float>(pd[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

void Adam::zero_grads(TensorDict& params) {
    for (auto& [name, p] : params)
        if (p.requires_grad()) p.zero_grad();
}

} // namespace trimix
