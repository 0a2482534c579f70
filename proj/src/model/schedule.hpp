#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace trimix {

// ============================================================
// DDPM noise schedule with a deterministic DDIM step rule
// ============================================================
//
// Index convention: betas/alphas live on t in [1, T]; alpha_bar is cumulative
// on t in [0, T] with alpha_bar[0] = 1 exactly, so t = 0 carries zero noise
// and the final DDIM step to t = 0 returns the clamped x0 estimate exactly.
class NoiseSchedule {
public:
    NoiseSchedule(int T, double beta_start, double beta_end);

    int T() const { return T_; }
    double beta(int t) const;      // t in [1, T]
    double alpha_bar(int t) const; // t in [0, T]
    double sqrt_alpha_bar(int t) const;
    double sqrt_one_minus_alpha_bar(int t) const;

    // round(linspace(T-1 -> 0)) with steps+1 entries, strictly decreasing.
    std::vector<int> ddim_times(int steps) const;

private:
    void check_t(int t, int lo) const;

    int T_;
    std::vector<double> betas_;     // [T+1], index 0 unused
    std::vector<double> alpha_bar_; // [T+1]
};

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, t in [0, T].
template <typename T>
TensorT<T> forward_noise(const NoiseSchedule& ns, const TensorT<T>& x0, int t,
                         const TensorT<T>& eps);

// eps_uncond + w * (eps_cond - eps_uncond); w = 1 and w = 0 return the
// corresponding input bitwise.
template <typename T>
TensorT<T> cfg_combine(const TensorT<T>& eps_cond, const TensorT<T>& eps_uncond, T w);

// x0_hat = (x_t - sqrt(1-ab_t) * eps_hat) / sqrt(ab_t), clamped to [-1, 1];
// result = sqrt(ab_next) * x0_hat + sqrt(1-ab_next) * eps_hat. t_next = t
// returns the state unchanged; t_next = 0 returns x0_hat exactly.
template <typename T>
TensorT<T> ddim_step(const NoiseSchedule& ns, const TensorT<T>& x_t, const TensorT<T>& eps_hat,
                     int t, int t_next);

} // namespace trimix
