#include "model/unet.hpp"

#include <cmath>

#include "core/error.hpp"

namespace trimix {

namespace op = trimix::ops;

namespace {

// ---- init helpers ----

void init_conv(TensorDict& d, const std::string& name, int co, int ci, Rng& rng,
               bool zero = false) {
    auto w = Tensor::zeros({co, ci, 3, 3});
    if (!zero) fill_normal(w, rng, 1.0 / std::sqrt(static_cast<double>(ci) * 9.0));
    d.put(name + ".w", w);
    d.put(name + ".b", Tensor::zeros({co}));
}

void init_linear(TensorDict& d, const std::string& name, int in, int out, Rng& rng,
                 bool bias = true, bool zero = false) {
    auto w = Tensor::zeros({in, out});
    if (!zero) fill_normal(w, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    d.put(name + ".w", w);
    if (bias) d.put(name + ".b", Tensor::zeros({out}));
}

void init_gn(TensorDict& d, const std::string& name, int c) {
    d.put(name + ".g", Tensor::full({c}, 1.f));
    d.put(name + ".b", Tensor::zeros({c}));
}

void init_resblock(TensorDict& d, const std::string& name, int ci, int co,
                   const ArchConfig& a, Rng& rng) {
    init_gn(d, name + ".gn1", ci);
    init_conv(d, name + ".conv1", co, ci, rng);
    init_linear(d, name + ".tproj", a.time_dim, co, rng);
    init_linear(d, name + ".cproj", a.emb_dim, co, rng, /*bias=*/false);
    init_gn(d, name + ".gn2", co);
    init_conv(d, name + ".conv2", co, co, rng);
    if (ci != co) init_conv(d, name + ".skip", co, ci, rng);
}

void init_attn(TensorDict& d, const std::string& name, int c, const ArchConfig& a, Rng& rng) {
    init_gn(d, name + ".gn", c);
    auto cam = Tensor::zeros({a.camera_slots, c});
    fill_normal(cam, rng, 0.2);
    d.put(name + ".cam", cam);
    init_linear(d, name + ".wq", c, c, rng, /*bias=*/false);
    init_linear(d, name + ".wk", c, c, rng, /*bias=*/false);
    init_linear(d, name + ".wv", c, c, rng, /*bias=*/false);
    // Zero out-projection: attention blocks start as the identity.
    init_linear(d, name + ".wo", c, c, rng, /*bias=*/true, /*zero=*/true);
}

// ---- forward helpers ----

template <typename T>
struct Ctx {
    Tape<T>& tp;
    const DictT<T>& P;
    const ArchConfig& arch;
};

template <typename T>
TensorT<T> sinusoidal(const ArchConfig& a, int t) {
    auto e = TensorT<T>::zeros({1, a.sin_dim});
    const int half = a.sin_dim / 2;
    for (int i = 0; i < half; i++) {
        const double freq =
            std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        const double arg = static_cast<double>(t) * freq;
        e.data()[i] = static_cast<T>(std::sin(arg));
        e.data()[half + i] = static_cast<T>(std::cos(arg));
    }
    return e;
}

template <typename T>
TensorT<T> resblock(Ctx<T>& c, const std::string& name, const TensorT<T>& x,
                    const TensorT<T>& st, const TensorT<T>& sc, int co) {
    auto& tp = c.tp;
    const auto& P = c.P;
    const int ci = x.dim(1);
    auto h = op::group_norm(tp, x, P.at(name + ".gn1.g"), P.at(name + ".gn1.b"), c.arch.groups);
    h = op::silu(tp, h);
    h = op::conv2d(tp, h, P.at(name + ".conv1.w"), P.at(name + ".conv1.b"), 1);
    auto tb = op::linear(tp, st, P.at(name + ".tproj.w"), P.at(name + ".tproj.b"));
    auto cb = op::linear(tp, sc, P.at(name + ".cproj.w"), TensorT<T>{});
    auto bias = op::reshape(tp, op::add(tp, tb, cb), {co});
    h = op::add_channel_bias(tp, h, bias);
    h = op::group_norm(tp, h, P.at(name + ".gn2.g"), P.at(name + ".gn2.b"), c.arch.groups);
    h = op::silu(tp, h);
    h = op::conv2d(tp, h, P.at(name + ".conv2.w"), P.at(name + ".conv2.b"), 1);
    auto skip = ci == co ? x : op::conv2d(tp, x, P.at(name + ".skip.w"), P.at(name + ".skip.b"), 1);
    auto out = op::add(tp, h, skip);
    op::check_finite(out, name);
    return out;
}

template <typename T>
TensorT<T> attnblock(Ctx<T>& c, int layer, const TensorT<T>& x, const std::vector<int>& slots,
                     const KvHook<T>& hook) {
    auto& tp = c.tp;
    const auto& P = c.P;
    const std::string name = ArchConfig::attn_name(layer);
    const int F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto h = op::group_norm(tp, x, P.at(name + ".gn.g"), P.at(name + ".gn.b"), c.arch.groups);
    auto tokens = op::reshape(tp, op::permute(tp, h, {0, 2, 3, 1}), {F, H * W, C});
    auto cam = op::gather_rows(tp, P.at(name + ".cam"), slots);
    tokens = op::add_token_bias(tp, tokens, cam);
    auto q = op::linear(tp, tokens, P.at(name + ".wq.w"), TensorT<T>{});
    auto k = op::linear(tp, tokens, P.at(name + ".wk.w"), TensorT<T>{});
    auto v = op::linear(tp, tokens, P.at(name + ".wv.w"), TensorT<T>{});
    if (hook) {
        auto [k2, v2] = hook(layer, k, v);
        k = k2;
        v = v2;
    }
    auto a = op::joint_attention(tp, q, k, v, slots);
    auto o = op::linear(tp, a, P.at(name + ".wo.w"), P.at(name + ".wo.b"));
    auto o4 = op::permute(tp, op::reshape(tp, o, {F, H, W, C}), {0, 3, 1, 2});
    auto out = op::add(tp, x, o4);
    op::check_finite(out, name);
    return out;
}

} // namespace

TensorDict init_denoiser_params(const ArchConfig& arch, Rng& rng) {
    arch.validate();
    const int c1 = arch.base_channels, c2 = 2 * c1, c3 = 4 * c1;
    TensorDict d;
    put_arch(d, arch);

    init_conv(d, "conv_in", c1, 6, rng);
    init_linear(d, "time.l1", arch.sin_dim, arch.time_dim, rng);
    init_linear(d, "time.l2", arch.time_dim, arch.time_dim, rng);

    init_resblock(d, "enc1", c1, c1, arch, rng);
    init_conv(d, "down1", c2, c1, rng);
    init_resblock(d, "enc2", c2, c2, arch, rng);
    init_attn(d, "enc2.attn", c2, arch, rng);
    init_conv(d, "down2", c3, c2, rng);
    init_resblock(d, "enc3", c3, c3, arch, rng);
    init_attn(d, "enc3.attn", c3, arch, rng);

    init_resblock(d, "mid.res1", c3, c3, arch, rng);
    init_attn(d, "mid.attn", c3, arch, rng);
    init_resblock(d, "mid.res2", c3, c3, arch, rng);

    init_resblock(d, "dec3", 2 * c3, c3, arch, rng);
    init_attn(d, "dec3.attn", c3, arch, rng);
    init_conv(d, "up1", c2, c3, rng);
    init_resblock(d, "dec2", 2 * c2, c2, arch, rng);
    init_attn(d, "dec2.attn", c2, arch, rng);
    init_conv(d, "up2", c1, c2, rng);
    init_resblock(d, "dec1", 2 * c1, c1, arch, rng);

    init_gn(d, "out.gn", c1);
    init_conv(d, "out.conv", 3, c1, rng, /*zero=*/true);

    // Conditioning embedder: two stride-2 convs, pooled, projected.
    init_conv(d, "emb.conv1", c1 / 2, 3, rng);
    init_conv(d, "emb.conv2", c1, c1 / 2, rng);
    init_linear(d, "emb.lin", c1, arch.emb_dim, rng);
    return d;
}

template <typename T>
int64_t param_count(const DictT<T>& params) {
    int64_t n = 0;
    for (const auto& [name, t] : params)
        if (name.rfind("__", 0) != 0) n += t.numel();
    return n;
}

template <typename T>
TensorT<T> encode_condition(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                            const TensorT<T>& image) {
    if (image.shape() != Shape{3, arch.resolution, arch.resolution})
        throw ShapeError("encode_condition expects [3," + std::to_string(arch.resolution) +
                         "," + std::to_string(arch.resolution) + "], got " +
                         shape_str(image.shape()));
    auto x = op::reshape(tp, image, {1, 3, arch.resolution, arch.resolution});
    x = op::conv2d(tp, x, params.at("emb.conv1.w"), params.at("emb.conv1.b"), 2);
    x = op::silu(tp, x);
    x = op::conv2d(tp, x, params.at("emb.conv2.w"), params.at("emb.conv2.b"), 2);
    x = op::silu(tp, x);
    auto pooled = op::global_avg_pool(tp, x); // [1, c1]
    auto e = op::linear(tp, pooled, params.at("emb.lin.w"), params.at("emb.lin.b"));
    auto out = op::reshape(tp, e, {arch.emb_dim});
    op::check_finite(out, "emb");
    return out;
}

template <typename T>
TensorT<T> predict_eps(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                       const TensorT<T>& x, int t, const TensorT<T>& cond,
                       const TensorT<T>& emb, const std::vector<int>& slots,
                       const KvHook<T>& hook) {
    const int R = arch.resolution;
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != R || x.dim(3) != R)
        throw ShapeError("predict_eps expects [F,3," + std::to_string(R) + "," +
                         std::to_string(R) + "], got " + shape_str(x.shape()));
    const int F = x.dim(0);
    if (static_cast<int>(slots.size()) != F)
        throw ShapeError("slots size must equal the frame count");
    for (int s : slots)
        if (s < 0 || s >= arch.camera_slots)
            throw InvalidArgError("camera slot " + std::to_string(s) + " outside [0, " +
                                  std::to_string(arch.camera_slots) + ")");
    if (t < 0 || t > arch.T) throw InvalidArgError("timestep outside [0, T]");
    if (cond.defined() && cond.shape() != Shape{3, R, R})
        throw ShapeError("conditioning image must be [3," + std::to_string(R) + "," +
                         std::to_string(R) + "], got " + shape_str(cond.shape()));
    if (emb.defined() && emb.shape() != Shape{arch.emb_dim})
        throw ShapeError("conditioning embedding must be [" + std::to_string(arch.emb_dim) +
                         "], got " + shape_str(emb.shape()));

    Ctx<T> c{tp, params, arch};
    const auto& P = params;

    // Absent conditioning concatenates zeros, identical to a zero image.
    auto cond_img = cond.defined() ? cond : TensorT<T>::zeros({3, R, R});
    auto cond_b = op::broadcast_frames(tp, cond_img, F);
    auto in6 = op::concat(tp, x, cond_b, 1);

    auto sin = sinusoidal<T>(arch, t);
    auto t1 = op::silu(tp, op::linear(tp, sin, P.at("time.l1.w"), P.at("time.l1.b")));
    auto temb = op::linear(tp, t1, P.at("time.l2.w"), P.at("time.l2.b"));
    auto st = op::silu(tp, temb); // [1, time_dim]
    auto cemb = emb.defined() ? emb : null_embedding<T>(arch);
    auto sc = op::silu(tp, op::reshape(tp, cemb, {1, arch.emb_dim}));

    const int c1 = arch.base_channels, c2 = 2 * c1, c3 = 4 * c1;
    auto h0 = op::conv2d(tp, in6, P.at("conv_in.w"), P.at("conv_in.b"), 1);
    auto e1 = resblock(c, "enc1", h0, st, sc, c1);
    auto d1 = op::conv2d(tp, e1, P.at("down1.w"), P.at("down1.b"), 2);
    auto e2 = resblock(c, "enc2", d1, st, sc, c2);
    e2 = attnblock(c, 0, e2, slots, hook);
    auto d2 = op::conv2d(tp, e2, P.at("down2.w"), P.at("down2.b"), 2);
    auto e3 = resblock(c, "enc3", d2, st, sc, c3);
    e3 = attnblock(c, 1, e3, slots, hook);

    auto m = resblock(c, "mid.res1", e3, st, sc, c3);
    m = attnblock(c, 2, m, slots, hook);
    m = resblock(c, "mid.res2", m, st, sc, c3);

    auto d3 = resblock(c, "dec3", op::concat(tp, m, e3, 1), st, sc, c3);
    d3 = attnblock(c, 3, d3, slots, hook);
    auto u1 = op::conv2d(tp, op::nearest_upsample_2x(tp, d3), P.at("up1.w"), P.at("up1.b"), 1);
    auto dd2 = resblock(c, "dec2", op::concat(tp, u1, e2, 1), st, sc, c2);
    dd2 = attnblock(c, 4, dd2, slots, hook);
    auto u2 = op::conv2d(tp, op::nearest_upsample_2x(tp, dd2), P.at("up2.w"), P.at("up2.b"), 1);
    auto dd1 = resblock(c, "dec1", op::concat(tp, u2, e1, 1), st, sc, c1);

    auto o = op::group_norm(tp, dd1, P.at("out.gn.g"), P.at("out.gn.b"), arch.groups);
    o = op::silu(tp, o);
    o = op::conv2d(tp, o, P.at("out.conv.w"), P.at("out.conv.b"), 1);
    op::check_finite(o, "out");
    return o;
}

#define TRIMIX_INST(T)                                                                        \
    template int64_t param_count<T>(const DictT<T>&);                                        \
    template TensorT<T> encode_condition<T>(Tape<T>&, const DictT<T>&, const ArchConfig&,    \
                                            const TensorT<T>&);                              \
    template TensorT<T> predict_eps<T>(Tape<T>&, const DictT<T>&, const ArchConfig&,         \
                                       const TensorT<T>&, int, const TensorT<T>&,            \
                                       const TensorT<T>&, const std::vector<int>&,           \
                                       const KvHook<T>&);

TRIMIX_INST(float)
TRIMIX_INST(double)
#undef TRIMIX_INST

} // namespace trimix
