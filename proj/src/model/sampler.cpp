#include "model/sampler.hpp"

#include "core/error.hpp"

namespace trimix {

template <typename T>
TensorT<T> sample_multiview(const DictT<T>& params, const ArchConfig& arch,
                            const TensorT<T>& cond, const TensorT<T>& emb,
                            const SampleConfig& cfg, std::vector<int> slots) {
    if (cfg.view_count < 1) throw InvalidArgError("sampling needs at least one view");
    if (slots.empty())
        for (int f = 0; f < cfg.view_count; f++) slots.push_back(f);
    if (static_cast<int>(slots.size()) != cfg.view_count)
        throw ShapeError("slots size must equal view_count");

    const auto ns = arch.schedule();
    const auto times = ns.ddim_times(cfg.steps);
    const int R = arch.resolution;

    Rng rng(cfg.seed);
    auto x = randn<T>({cfg.view_count, 3, R, R}, rng);

    Tape<T> tp(false);
    for (size_t i = 0; i + 1 < times.size(); i++) {
        const int t = times[i], t_next = times[i + 1];
        auto eps_c = predict_eps<T>(tp, params, arch, x, t, cond, emb, slots);
        TensorT<T> eps = eps_c;
        if (cfg.cfg_scale != 1.f) {
            auto eps_u = predict_eps<T>(tp, params, arch, x, t, TensorT<T>{}, TensorT<T>{},
                                        slots);
            eps = cfg_combine<T>(eps_c, eps_u, static_cast<T>(cfg.cfg_scale));
        }
        x = ddim_step<T>(ns, x, eps, t, t_next);
    }
    return x;
}

template TensorT<float> sample_multiview<float>(const DictT<float>&, const ArchConfig&,
                                                const TensorT<float>&, const TensorT<float>&,
                                                const SampleConfig&, std::vector<int>);
template TensorT<double> sample_multiview<double>(const DictT<double>&, const ArchConfig&,
                                                  const TensorT<double>&,
                                                  const TensorT<double>&, const SampleConfig&,
                                                  std::vector<int>);

} // namespace trimix
