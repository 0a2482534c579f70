#include "model/schedule.hpp"

#include <cmath>

#include "core/error.hpp"

namespace trimix {

NoiseSchedule::NoiseSchedule(int T, double beta_start, double beta_end) : T_(T) {
    if (T < 1) throw InvalidArgError("schedule needs T >= 1");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_end < beta_start)
        throw InvalidArgError("betas must satisfy 0 < beta_start <= beta_end < 1");
    betas_.assign(static_cast<size_t>(T) + 1, 0.0);
    alpha_bar_.assign(static_cast<size_t>(T) + 1, 1.0);
    for (int t = 1; t <= T; t++) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        betas_[static_cast<size_t>(t)] = beta_start + (beta_end - beta_start) * frac;
        alpha_bar_[static_cast<size_t>(t)] =
            alpha_bar_[static_cast<size_t>(t - 1)] * (1.0 - betas_[static_cast<size_t>(t)]);
    }
}

void NoiseSchedule::check_t(int t, int lo) const {
    if (t < lo || t > T_)
        throw InvalidArgError("schedule index " + std::to_string(t) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(T_) + "]");
}

double NoiseSchedule::beta(int t) const {
    check_t(t, 1);
    return betas_[static_cast<size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_t(t, 0);
    return alpha_bar_[static_cast<size_t>(t)];
}

double NoiseSchedule::sqrt_alpha_bar(int t) const { return std::sqrt(alpha_bar(t)); }

double NoiseSchedule::sqrt_one_minus_alpha_bar(int t) const {
    return std::sqrt(1.0 - alpha_bar(t));
}

std::vector<int> NoiseSchedule::ddim_times(int steps) const {
    if (steps < 1) throw InvalidArgError("ddim needs at least one step");
    std::vector<int> times(static_cast<size_t>(steps) + 1);
    for (int i = 0; i <= steps; i++) {
        const double v = static_cast<double>(T_ - 1) *
                         (1.0 - static_cast<double>(i) / static_cast<double>(steps));
        times[static_cast<size_t>(i)] = static_cast<int>(std::lround(v));
    }
    for (int i = 1; i <= steps; i++)
        if (times[static_cast<size_t>(i)] >= times[static_cast<size_t>(i - 1)])
            throw InvalidArgError("ddim step count too large for the schedule");
    return times;
}

template <typename T>
TensorT<T> forward_noise(const NoiseSchedule& ns, const TensorT<T>& x0, int t,
                         const TensorT<T>& eps) {
    if (x0.shape() != eps.shape())
        throw ShapeError("forward_noise: x0 " + shape_str(x0.shape()) + " vs eps " +
                         shape_str(eps.shape()));
    const T a = static_cast<T>(ns.sqrt_alpha_bar(t));
    const T b = static_cast<T>(ns.sqrt_one_minus_alpha_bar(t));
    auto out = TensorT<T>::zeros(x0.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; i++) out.data()[i] = a * x0.data()[i] + b * eps.data()[i];
    return out;
}

template <typename T>
TensorT<T> cfg_combine(const TensorT<T>& eps_cond, const TensorT<T>& eps_uncond, T w) {
    if (eps_cond.shape() != eps_uncond.shape())
        throw ShapeError("cfg_combine: mismatched shapes");
    if (w == T(1)) return eps_cond;
    if (w == T(0)) return eps_uncond;
    auto out = TensorT<T>::zeros(eps_cond.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; i++)
        out.data()[i] = eps_uncond.data()[i] + w * (eps_cond.data()[i] - eps_uncond.data()[i]);
    return out;
}

template <typename T>
TensorT<T> ddim_step(const NoiseSchedule& ns, const TensorT<T>& x_t, const TensorT<T>& eps_hat,
                     int t, int t_next) {
    if (x_t.shape() != eps_hat.shape()) throw ShapeError("ddim_step: mismatched shapes");
    if (t_next > t) throw InvalidArgError("ddim_step: t_next must not exceed t");
    if (t_next == t) return x_t;
    const T a_t = static_cast<T>(ns.sqrt_alpha_bar(t));
    const T b_t = static_cast<T>(ns.sqrt_one_minus_alpha_bar(t));
    const T a_n = static_cast<T>(ns.sqrt_alpha_bar(t_next));
    const T b_n = static_cast<T>(ns.sqrt_one_minus_alpha_bar(t_next));
    auto out = TensorT<T>::zeros(x_t.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; i++) {
        T x0 = (x_t.data()[i] - b_t * eps_hat.data()[i]) / a_t;
        x0 = std::min(T(1), std::max(T(-1), x0));
        // alpha_bar[0] = 1 makes the final step return x0 exactly.
        out.data()[i] = a_n * x0 + b_n * eps_hat.data()[i];
    }
    return out;
}

#define TRIMIX_INST(T)                                                                       \
    template TensorT<T> forward_noise<T>(const NoiseSchedule&, const TensorT<T>&, int,       \
                                         const TensorT<T>&);                                 \
    template TensorT<T> cfg_combine<T>(const TensorT<T>&, const TensorT<T>&, T);             \
    template TensorT<T> ddim_step<T>(const NoiseSchedule&, const TensorT<T>&, const TensorT<T>&, \
                                     int, int);

TRIMIX_INST(float)
TRIMIX_INST(double)
#undef TRIMIX_INST

} // namespace trimix
