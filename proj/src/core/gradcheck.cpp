#include "core/gradcheck.hpp"

#include <cmath>

namespace trimix {

template <typename T>
double grad_check(const std::function<TensorT<T>(Tape<T>&, const TensorT<T>&)>& f,
                  const TensorT<T>& x, double eps) {
    if (eps <= 0) throw InvalidArgError("grad_check: eps must be positive");

    // analytic pass
    auto xa = TensorT<T>::from_data(x.shape(), x.vec());
    xa.set_requires_grad(true);
    Tape<T> tape;
    auto loss = f(tape, xa);
    if (loss.numel() != 1) throw ContractError("grad_check: f must return a scalar");
    tape.backward(loss);
    std::vector<T> gad(xa.grad(), xa.grad() + xa.numel());

    // central differences
    double worst = 0.0;
    auto xp = TensorT<T>::from_data(x.shape(), x.vec());
    for (int64_t i = 0; i < x.numel(); i++) {
        const T orig = xp.data()[i];
        xp.data()[i] = orig + static_cast<T>(eps);
        Tape<T> t1(false);
        const double fp = static_cast<double>(f(t1, xp).data()[0]);
        xp.data()[i] = orig - static_cast<T>(eps);
        Tape<T> t2(false);
        const double fm = static_cast<double>(f(t2, xp).data()[0]);
        xp.data()[i] = orig;
        const double gfd = (fp - fm) / (2.0 * eps);
        const double err =
            std::abs(gfd - static_cast<double>(gad[static_cast<size_t>(i)])) /
            std::max(1.0, std::abs(gfd));
        worst = std::max(worst, err);
    }
    return worst;
}

template double grad_check<float>(
    const std::function<TensorT<float>(Tape<float>&, const TensorT<float>&)>&,
    const TensorT<float>&, double);
template double grad_check<double>(
    const std::function<TensorT<double>(Tape<double>&, const TensorT<double>&)>&,
    const TensorT<double>&, double);

} // namespace trimix
