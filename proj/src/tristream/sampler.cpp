#include "tristream/sampler.hpp"

#include <cmath>

namespace trimix {

namespace op = ops;

void TriStreamConfig::validate() const {
    if (cfg_main < 0 || cfg_object < 0 || cfg_reference < 0)
        throw InvalidArgError("tri-stream config: CFG scales must be >= 0");
    if (steps < 1) throw InvalidArgError("tri-stream config: steps must be >= 1");
    if (view_count < 1) throw InvalidArgError("tri-stream config: view_count must be >= 1");
}

Json to_json(const TriStreamConfig& c) {
    return Json{{"cfg_main", c.cfg_main},
                {"cfg_object", c.cfg_object},
                {"cfg_reference", c.cfg_reference},
                {"argmax", c.argmax},
                {"unconditional_main", c.unconditional_main},
                {"extra_frame", c.extra_frame},
                {"shared_init_noise", c.shared_init_noise},
                {"steps", c.steps},
                {"view_count", c.view_count},
                {"seed", c.seed}};
}

TriStreamConfig tri_stream_config_from_json(const Json& j) {
    TriStreamConfig c;
    c.cfg_main = j.at("cfg_main").get<float>();
    c.cfg_object = j.at("cfg_object").get<float>();
    c.cfg_reference = j.at("cfg_reference").get<float>();
    c.argmax = j.at("argmax").get<bool>();
    c.unconditional_main = j.at("unconditional_main").get<bool>();
    c.extra_frame = j.at("extra_frame").get<bool>();
    c.shared_init_noise = j.at("shared_init_noise").get<bool>();
    c.steps = j.at("steps").get<int>();
    c.view_count = j.at("view_count").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.validate();
    return c;
}

template <typename T>
KvHook<T> capture_kv_hook(KvCapture<T>& cap) {
    cap.k.assign(ArchConfig::kAttnLayers, TensorT<T>{});
    cap.v.assign(ArchConfig::kAttnLayers, TensorT<T>{});
    return [&cap](int layer, const TensorT<T>& k, const TensorT<T>& v) {
        cap.k.at(size_t(layer)) = k;
        cap.v.at(size_t(layer)) = v;
        return std::make_pair(k, v);
    };
}

template <typename T>
KvHook<T> mixing_hook(Tape<T>& tp, const KvCapture<T>& obj, const KvCapture<T>& ref,
                      const std::vector<TensorT<T>>& alphas) {
    return [&tp, &obj, &ref, &alphas](int layer, const TensorT<T>& k, const TensorT<T>& v) {
        const auto l = size_t(layer);
        if (l >= obj.k.size() || !obj.k[l].defined() || !ref.k[l].defined())
            throw ContractError("mixing hook: no captured K/V for attention layer " +
                                std::to_string(layer));
        auto km = mix_tokens(tp, obj.k[l], ref.k[l], k, alphas.at(l));
        auto vm = mix_tokens(tp, obj.v[l], ref.v[l], v, alphas.at(l));
        return std::make_pair(km, vm);
    };
}

std::vector<Tensor> inference_alphas(const MixWeights& mw, int frames, bool argmax) {
    if (frames < 1) throw InvalidArgError("inference_alphas: frames must be >= 1");
    const int rows = int(mw.logits.dim(1));
    std::vector<Tensor> out;
    out.reserve(size_t(mw.layers()));
    for (int l = 0; l < mw.layers(); l++) {
        auto a = Tensor::zeros({frames, 3});
        for (int f = 0; f < frames; f++) {
            // An extra frame beyond the trained rows reuses frame 0's triple.
            const int row = mw.per_frame ? (f < rows ? f : 0) : 0;
            auto al = alphas_from_logits(mw, l, row);
            if (argmax) al = argmax_select(al);
            for (int s = 0; s < 3; s++) a.data()[f * 3 + s] = float(al[size_t(s)]);
        }
        out.push_back(std::move(a));
    }
    return out;
}

void tri_stream_denoise_step(const TensorDict& params, const ArchConfig& arch,
                             const NoiseSchedule& sched, StreamBundle& bundle,
                             const MixWeights& mw, const TriStreamConfig& cfg, int t_next,
                             const std::vector<int>& slots) {
    mw.validate(arch);
    const int t = bundle.t;
    if (!bundle.object_x.defined() || bundle.object_x.shape() != bundle.reference_x.shape() ||
        bundle.object_x.shape() != bundle.main_x.shape())
        throw ContractError("tri-stream step: stream latents must be shape-identical");
    const int F = int(bundle.main_x.dim(0));
    if (int(slots.size()) != F) throw ContractError("tri-stream step: slots must cover F frames");
    if (mw.per_frame && mw.frames != F && mw.frames + 1 != F)
        throw ContractError("tri-stream step: mix weights cover " + std::to_string(mw.frames) +
                            " frames but the bundle has " + std::to_string(F));

    TapeF tp(false);
    const Tensor none;

    // Side streams: conditional pass captures K/V for the main stream's mix;
    // their own trajectories never see the mixing weights.
    KvCapture<float> cap_o, cap_r;
    auto eps_oc = predict_eps<float>(tp, params, arch, bundle.object_x, t, bundle.object_cond,
                                     bundle.object_emb, slots, capture_kv_hook(cap_o));
    auto eps_o = eps_oc;
    if (cfg.cfg_object != 1.f) {
        auto eps_ou =
            predict_eps<float>(tp, params, arch, bundle.object_x, t, none, none, slots);
        eps_o = cfg_combine<float>(eps_oc, eps_ou, cfg.cfg_object);
    }

    auto eps_rc = predict_eps<float>(tp, params, arch, bundle.reference_x, t,
                                     bundle.reference_cond, bundle.reference_emb, slots,
                                     capture_kv_hook(cap_r));
    auto eps_r = eps_rc;
    if (cfg.cfg_reference != 1.f) {
        auto eps_ru =
            predict_eps<float>(tp, params, arch, bundle.reference_x, t, none, none, slots);
        eps_r = cfg_combine<float>(eps_rc, eps_ru, cfg.cfg_reference);
    }

    // Main stream: mixed K/V in both passes, sourcing the side streams'
    // conditional captures.
    const auto alphas = inference_alphas(mw, F, cfg.argmax);
    const auto hook = mixing_hook<float>(tp, cap_o, cap_r, alphas);
    const Tensor& main_cond = cfg.unconditional_main ? none : bundle.main_cond;
    Tensor eps_mc, eps_mu;
    if (cfg.cfg_main != 0.f)
        eps_mc = predict_eps<float>(tp, params, arch, bundle.main_x, t, main_cond,
                                    bundle.main_emb, slots, hook);
    if (cfg.cfg_main != 1.f)
        eps_mu = predict_eps<float>(tp, params, arch, bundle.main_x, t, none, none, slots, hook);
    Tensor eps_m = cfg.cfg_main == 1.f   ? eps_mc
                   : cfg.cfg_main == 0.f ? eps_mu
                                         : cfg_combine<float>(eps_mc, eps_mu, cfg.cfg_main);

    bundle.object_x = ddim_step<float>(sched, bundle.object_x, eps_o, t, t_next);
    bundle.reference_x = ddim_step<float>(sched, bundle.reference_x, eps_r, t, t_next);
    bundle.main_x = ddim_step<float>(sched, bundle.main_x, eps_m, t, t_next);
    bundle.t = t_next;
}

void reference_latent_replacement(const NoiseSchedule& sched, const Tensor& clean_views,
                                  StreamBundle& bundle, Rng& rng) {
    if (!clean_views.defined() || clean_views.shape() != bundle.reference_x.shape())
        throw ContractError("latent replacement: clean views must match the reference "
                            "stream's frame shape");
    auto eps = randn<float>(clean_views.shape(), rng);
    bundle.reference_x = forward_noise<float>(sched, clean_views, bundle.t, eps);
}

TransferResult sample_transfer(const TensorDict& params, const ArchConfig& arch,
                               const Tensor& object_image, const Tensor& reference_image,
                               const MixWeights& mw, const TriStreamConfig& cfg,
                               const std::optional<Tensor>& reference_views) {
    cfg.validate();
    mw.validate(arch);
    const int R = arch.resolution;
    const Shape img_shape{3, R, R};
    if (!object_image.defined() || object_image.shape() != img_shape)
        throw InvalidArgError("sample_transfer: object image must be [3,R,R] at the model "
                              "resolution");
    if (!reference_image.defined() || reference_image.shape() != img_shape)
        throw InvalidArgError("sample_transfer: reference image must be [3,R,R] at the model "
                              "resolution");
    const int F = cfg.view_count;
    if (mw.per_frame && mw.frames != F)
        throw ContractError("sample_transfer: mix weights trained for " +
                            std::to_string(mw.frames) + " frames, got view_count " +
                            std::to_string(F));
    const int Fx = F + (cfg.extra_frame ? 1 : 0);
    if (Fx > arch.camera_slots)
        throw InvalidArgError("sample_transfer: frame count exceeds camera slots");

    std::vector<int> slots(static_cast<size_t>(Fx));
    for (int f = 0; f < F; f++) slots[size_t(f)] = f;
    if (cfg.extra_frame) slots[size_t(F)] = 0; // input camera pose

    TapeF tp(false);
    StreamBundle b;
    b.object_cond = object_image;
    b.reference_cond = reference_image;
    b.object_emb = encode_condition<float>(tp, params, arch, object_image);
    b.reference_emb = encode_condition<float>(tp, params, arch, reference_image);
    if (cfg.unconditional_main) {
        b.main_emb = op::scale(tp, op::add(tp, b.object_emb, b.reference_emb), 0.5f);
    } else {
        // Conditional fallback: the main stream sees the object image, which
        // reduces to the plain sampler when all mass sits on the main stream.
        b.main_cond = object_image;
        b.main_emb = b.object_emb;
    }

    Rng rng(cfg.seed);
    const Shape lat_shape{Fx, 3, R, R};
    if (cfg.shared_init_noise) {
        auto x = randn<float>(lat_shape, rng);
        b.object_x = x;
        b.reference_x = x;
        b.main_x = x;
    } else {
        b.object_x = randn<float>(lat_shape, rng);
        b.reference_x = randn<float>(lat_shape, rng);
        b.main_x = randn<float>(lat_shape, rng);
    }

    // Clean reference frames for per-step latent replacement; the extra
    // frame reuses the front reference view.
    Tensor replacement;
    if (reference_views.has_value()) {
        const auto& rv = *reference_views;
        if (!rv.defined() || rv.rank() != 4 || int(rv.dim(0)) != F || rv.dim(1) != 3 ||
            int(rv.dim(2)) != R || int(rv.dim(3)) != R)
            throw ContractError("sample_transfer: reference views must be [F,3,R,R]");
        replacement = rv;
        if (cfg.extra_frame) {
            TapeF t2(false);
            replacement = op::concat(t2, rv, op::slice(t2, rv, 0, 0, 1), 0);
        }
    }

    const auto sched = arch.schedule();
    const auto times = sched.ddim_times(cfg.steps);
    b.t = times[0];
    for (size_t i = 0; i + 1 < times.size(); i++) {
        b.t = times[i];
        if (replacement.defined()) reference_latent_replacement(sched, replacement, b, rng);
        tri_stream_denoise_step(params, arch, sched, b, mw, cfg, times[i + 1], slots);
    }

    TransferResult out;
    if (cfg.extra_frame) {
        TapeF t2(false);
        out.main_views = op::slice(t2, b.main_x, 0, 0, F);
        out.object_views = op::slice(t2, b.object_x, 0, 0, F);
        out.reference_views = op::slice(t2, b.reference_x, 0, 0, F);
    } else {
        out.main_views = b.main_x;
        out.object_views = b.object_x;
        out.reference_views = b.reference_x;
    }
    return out;
}

template KvHook<float> capture_kv_hook(KvCapture<float>&);
template KvHook<double> capture_kv_hook(KvCapture<double>&);
template KvHook<float> mixing_hook(Tape<float>&, const KvCapture<float>&,
                                   const KvCapture<float>&, const std::vector<TensorT<float>>&);
template KvHook<double> mixing_hook(Tape<double>&, const KvCapture<double>&,
                                    const KvCapture<double>&,
                                    const std::vector<TensorT<double>>&);

} // namespace trimix
