#include "train/mix_trainer.hpp"

#include <cmath>
#include <ostream>

#include "train/adam.hpp"

namespace trimix {

namespace op = ops;

void AdaptConfig::validate() const {
    if (lr <= 0) throw InvalidArgError("adapt config: lr must be positive");
    if (steps < 1) throw InvalidArgError("adapt config: steps must be >= 1");
    if (t_lo_frac < 0 || t_hi_frac > 1 || t_lo_frac >= t_hi_frac)
        throw InvalidArgError("adapt config: need 0 <= t_lo < t_hi <= 1");
    if (log_interval < 1) throw InvalidArgError("adapt config: log_interval must be >= 1");
}

Json to_json(const AdaptConfig& c) {
    return Json{{"lr", c.lr},
                {"steps", c.steps},
                {"seed", c.seed},
                {"per_frame", c.per_frame},
                {"t_lo_frac", c.t_lo_frac},
                {"t_hi_frac", c.t_hi_frac},
                {"log_interval", c.log_interval}};
}

AdaptConfig adapt_config_from_json(const Json& j) {
    AdaptConfig c;
    c.lr = j.at("lr").get<double>();
    c.steps = j.at("steps").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.per_frame = j.at("per_frame").get<bool>();
    c.t_lo_frac = j.at("t_lo_frac").get<double>();
    c.t_hi_frac = j.at("t_hi_frac").get<double>();
    c.log_interval = j.at("log_interval").get<int>();
    c.validate();
    return c;
}

TripletTensors<float> triplet_tensors(const TripletData& d) {
    return {d.object_views, d.object_cond, d.reference_views, d.reference_cond,
            d.target_views};
}

TripletTensors<double> widen_triplet(const TripletTensors<float>& d) {
    return {widen(d.object_views), widen(d.object_cond), widen(d.reference_views),
            widen(d.reference_cond), widen(d.target_views)};
}

template <typename T>
TensorT<T> mix_step_loss(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                         const NoiseSchedule& sched, const TripletTensors<T>& data,
                         const TensorT<T>& logits, int t, const TensorT<T>& eps) {
    const int F = int(data.target_views.dim(0));
    std::vector<int> slots(static_cast<size_t>(F));
    for (int f = 0; f < F; f++) slots[size_t(f)] = f;

    // Side streams: no-grad conditional passes at the shared (t, eps).
    Tape<T> side(false);
    auto emb_o = encode_condition<T>(side, params, arch, data.object_cond);
    auto emb_r = encode_condition<T>(side, params, arch, data.reference_cond);
    auto x_o = forward_noise<T>(sched, data.object_views, t, eps);
    auto x_r = forward_noise<T>(sched, data.reference_views, t, eps);
    KvCapture<T> cap_o, cap_r;
    (void)predict_eps<T>(side, params, arch, x_o, t, data.object_cond, emb_o, slots,
                         capture_kv_hook(cap_o));
    (void)predict_eps<T>(side, params, arch, x_r, t, data.reference_cond, emb_r, slots,
                         capture_kv_hook(cap_r));

    // Main stream: unconditional concat, mean side embedding — the inference
    // configuration the logits are being optimized for.
    auto emb_m = op::scale(side, op::add(side, emb_o, emb_r), T(0.5));
    auto x_m = forward_noise<T>(sched, data.target_views, t, eps);

    std::vector<TensorT<T>> alphas;
    alphas.reserve(size_t(ArchConfig::kAttnLayers));
    for (int l = 0; l < ArchConfig::kAttnLayers; l++)
        alphas.push_back(layer_alphas(tp, logits, l));
    const auto hook = mixing_hook<T>(tp, cap_o, cap_r, alphas);
    auto eps_hat =
        predict_eps<T>(tp, params, arch, x_m, t, TensorT<T>{}, emb_m, slots, hook);
    return op::mse(tp, eps_hat, eps);
}

MixTrainResult train_mix(const Manifest& man, const TensorDict& base,
                         const std::vector<TripletRef>& triplets, const AdaptConfig& cfg,
                         std::ostream* log, const MixWeights* init) {
    cfg.validate();
    if (triplets.empty()) throw InvalidArgError("train_mix: at least one triplet required");
    const auto arch = get_arch(base);
    const auto sched = arch.schedule();
    if (man.resolution != arch.resolution)
        throw ContractError("train_mix: manifest resolution does not match the checkpoint");

    std::vector<TripletTensors<float>> data;
    data.reserve(triplets.size());
    for (const auto& t : triplets) {
        auto d = triplet_tensors(load_triplet(man, t));
        if (int(d.target_views.dim(0)) != man.view_count ||
            int(d.target_views.dim(2)) != arch.resolution)
            throw ContractError("train_mix: triplet views do not match the checkpoint shape");
        data.push_back(std::move(d));
    }
    const int F = man.view_count;

    // Freeze every base entry; the optimizer only ever sees the mix dict.
    for (const auto& [name, tens] : base)
        if (name.rfind("__", 0) != 0) {
            auto h = tens; // handle copy; the flag lives on the shared payload
            h.set_requires_grad(false);
        }
    const uint64_t frozen_sum = dict_checksum(base);

    auto mw = init_mix_weights(ArchConfig::kAttnLayers, cfg.per_frame ? F : 1, cfg.per_frame);
    mw.frames = F;
    if (init) {
        init->validate(arch);
        if (init->per_frame != cfg.per_frame || init->logits.shape() != mw.logits.shape())
            throw ContractError("train_mix: initial mix weights do not match the config layout");
        std::copy(init->logits.data(), init->logits.data() + init->logits.numel(),
                  mw.logits.data());
    }
    mw.logits.set_requires_grad(true);
    TensorDict mix;
    mix.put("mix.logits", mw.logits);

    int64_t trainable = 0;
    for (const auto& [name, tens] : mix)
        if (tens.requires_grad()) trainable += tens.numel();
    for (const auto& [name, tens] : base)
        if (name.rfind("__", 0) != 0 && tens.requires_grad()) trainable += tens.numel();
    const int64_t expected = int64_t(ArchConfig::kAttnLayers) * (cfg.per_frame ? F : 1) * 3;
    if (trainable != expected)
        throw ContractError("train_mix: trainable scalar count " + std::to_string(trainable) +
                            " differs from the mixing layout " + std::to_string(expected));

    const int t_lo = int(std::lround(cfg.t_lo_frac * arch.T));
    const int t_hi = std::min(arch.T - 1, int(std::lround(cfg.t_hi_frac * arch.T)));

    Adam opt(cfg.lr);
    Rng rng(cfg.seed);
    MixTrainResult out;
    out.trainable_count = trainable;
    out.losses.reserve(size_t(cfg.steps));

    for (int step = 0; step < cfg.steps; step++) {
        const auto& d = data[size_t(rng.uniform_int(int64_t(data.size())))];
        const int t = t_lo + int(rng.uniform_int(int64_t(t_hi - t_lo + 1)));
        auto eps = randn<float>(d.target_views.shape(), rng);

        try {
            TapeF tp(true);
            auto loss = mix_step_loss<float>(tp, base, arch, sched, d, mw.logits, t, eps);
            const float l = loss.data()[0];
            if (!std::isfinite(l)) throw NumericError("loss diverged");
            out.losses.push_back(l);
            tp.backward(loss);
            opt.step(mix);
            opt.zero_grads(mix);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(step) + ": " + e.what());
        }

        if (log && (step % cfg.log_interval == 0 || step + 1 == cfg.steps))
            (*log) << "mix step " << step << " loss " << out.losses.back() << "\n";
    }

    if (dict_checksum(base) != frozen_sum)
        throw ContractError("train_mix: frozen base parameters were mutated");

    mw.logits.set_requires_grad(false);
    out.mw = std::move(mw);
    return out;
}

double mix_probe_loss(const TensorDict& base, const ArchConfig& arch,
                      const std::vector<TripletData>& data, const MixWeights& mw, int count,
                      uint64_t probe_seed) {
    if (data.empty()) throw InvalidArgError("mix_probe_loss: no triplets");
    if (count < 1) throw InvalidArgError("mix_probe_loss: count must be >= 1");
    const auto sched = arch.schedule();
    const int t_lo = int(std::lround(0.1 * arch.T));
    const int t_hi = std::min(arch.T - 1, int(std::lround(0.9 * arch.T)));
    Rng rng(probe_seed);
    double acc = 0;
    for (int i = 0; i < count; i++) {
        const auto d = triplet_tensors(data[size_t(i) % data.size()]);
        const int t = t_lo + int(rng.uniform_int(int64_t(t_hi - t_lo + 1)));
        auto eps = randn<float>(d.target_views.shape(), rng);
        TapeF tp(false);
        auto loss = mix_step_loss<float>(tp, base, arch, sched, d, mw.logits, t, eps);
        acc += loss.data()[0];
    }
    return acc / count;
}

template TensorT<float> mix_step_loss(Tape<float>&, const DictT<float>&, const ArchConfig&,
                                      const NoiseSchedule&, const TripletTensors<float>&,
                                      const TensorT<float>&, int, const TensorT<float>&);
template TensorT<double> mix_step_loss(Tape<double>&, const DictT<double>&, const ArchConfig&,
                                       const NoiseSchedule&, const TripletTensors<double>&,
                                       const TensorT<double>&, int, const TensorT<double>&);

} // namespace trimix
