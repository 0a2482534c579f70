#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/gradcheck.hpp"
#include "model/sampler.hpp"
#include "model/schedule.hpp"
#include "model/unet.hpp"

using namespace trimix;
namespace op = trimix::ops;

namespace {

// Small config used across these tests: 8x8 input, 8/16/32 channels.
ArchConfig tiny_arch() {
    ArchConfig a;
    a.resolution = 8;
    a.base_channels = 8;
    a.emb_dim = 8;
    a.time_dim = 8;
    a.sin_dim = 4;
    a.groups = 8;
    a.camera_slots = 4;
    a.T = 50;
    return a;
}

} // namespace

TEST_CASE("schedule satisfies the basic invariants") {
    NoiseSchedule ns(200, 1e-4, 0.02);
    CHECK(ns.alpha_bar(0) == 1.0);
    for (int t = 1; t <= 200; t++) {
        CHECK(ns.beta(t) > 0.0);
        CHECK(ns.beta(t) < 1.0);
        CHECK(ns.alpha_bar(t) < ns.alpha_bar(t - 1));
    }
    CHECK(ns.beta(1) == doctest::Approx(1e-4));
    CHECK(ns.beta(200) == doctest::Approx(0.02));
    // Terminal signal level for this schedule.
    CHECK(ns.alpha_bar(200) == doctest::Approx(0.133).epsilon(0.05));
    CHECK_THROWS_AS(ns.alpha_bar(201), InvalidArgError);
    CHECK_THROWS_AS(ns.beta(0), InvalidArgError);
}

TEST_CASE("forward_noise endpoints") {
    NoiseSchedule ns(200, 1e-4, 0.02);
    Rng rng(3);
    auto x0 = randn<float>({2, 3, 4, 4}, rng);
    auto eps = randn<float>({2, 3, 4, 4}, rng);

    // t = 0 carries no noise at all.
    auto x_t0 = forward_noise(ns, x0, 0, eps);
    CHECK(bitwise_equal(x_t0, x0));

    // eps = 0 scales x0 exactly.
    auto zero = Tensor::zeros({2, 3, 4, 4});
    auto x_t = forward_noise(ns, x0, 100, zero);
    const float a = static_cast<float>(ns.sqrt_alpha_bar(100));
    for (int64_t i = 0; i < x0.numel(); i++) CHECK(x_t.data()[i] == a * x0.data()[i]);

    auto bad = Tensor::zeros({2, 3, 4, 5});
    CHECK_THROWS_AS(forward_noise(ns, x0, 10, bad), ShapeError);
}

TEST_CASE("forward_noise variance matches one minus alpha_bar") {
    NoiseSchedule ns(200, 1e-4, 0.02);
    auto x0 = Tensor::full({4}, 0.25f);
    Rng rng(99);
    const int t = 120, draws = 20000;
    std::vector<double> mean(4, 0.0), m2(4, 0.0);
    for (int d = 0; d < draws; d++) {
        auto eps = randn<float>({4}, rng);
        auto x_t = forward_noise(ns, x0, t, eps);
        for (int i = 0; i < 4; i++) {
            const double delta = x_t.data()[i] - mean[static_cast<size_t>(i)];
            mean[static_cast<size_t>(i)] += delta / (d + 1);
            m2[static_cast<size_t>(i)] +=
                delta * (x_t.data()[i] - mean[static_cast<size_t>(i)]);
        }
    }
    const double want = 1.0 - ns.alpha_bar(t);
    for (int i = 0; i < 4; i++) {
        const double var = m2[static_cast<size_t>(i)] / (draws - 1);
        CHECK(std::fabs(var - want) / want < 0.05);
    }
}

TEST_CASE("cfg_combine endpoints are exact and midpoints linear") {
    Rng rng(5);
    auto c = randn<float>({7}, rng);
    auto u = randn<float>({7}, rng);
    CHECK(bitwise_equal(cfg_combine(c, u, 1.f), c));
    CHECK(bitwise_equal(cfg_combine(c, u, 0.f), u));
    auto g = cfg_combine(c, u, 5.f);
    for (int i = 0; i < 7; i++)
        CHECK(g.data()[i] ==
              doctest::Approx(u.data()[i] + 5.f * (c.data()[i] - u.data()[i])).epsilon(1e-6));
    // w and 2-w bracket eps_cond symmetrically.
    auto lo = cfg_combine(c, u, 0.5f);
    auto hi = cfg_combine(c, u, 1.5f);
    for (int i = 0; i < 7; i++)
        CHECK(0.5f * (lo.data()[i] + hi.data()[i]) == doctest::Approx(c.data()[i]).epsilon(1e-5));
}

TEST_CASE("ddim_step inverts forward_noise and respects endpoints") {
    NoiseSchedule ns(200, 1e-4, 0.02);
    Rng rng(8);
    auto x0 = randn<float>({1, 3, 4, 4}, rng, 0.5);
    for (float& v : x0.vec()) v = std::min(1.f, std::max(-1.f, v));
    auto eps = randn<float>({1, 3, 4, 4}, rng);
    const int t = 150;
    auto x_t = forward_noise(ns, x0, t, eps);

    // True eps: jumping straight to 0 recovers x0.
    auto rec = ddim_step(ns, x_t, eps, t, 0);
    for (int64_t i = 0; i < x0.numel(); i++)
        CHECK(rec.data()[i] == doctest::Approx(x0.data()[i]).epsilon(2e-5));

    // t_next = t is the identity.
    CHECK(bitwise_equal(ddim_step(ns, x_t, eps, t, t), x_t));
    CHECK_THROWS_AS(ddim_step(ns, x_t, eps, t, t + 1), InvalidArgError);
    CHECK_THROWS_AS(ddim_step(ns, x_t, eps, 500, 0), InvalidArgError);
}

TEST_CASE("ddim time grid spans T-1 down to zero") {
    NoiseSchedule ns(200, 1e-4, 0.02);
    auto times = ns.ddim_times(50);
    REQUIRE(times.size() == 51);
    CHECK(times.front() == 199);
    CHECK(times.back() == 0);
    for (size_t i = 1; i < times.size(); i++) CHECK(times[i] < times[i - 1]);
}

TEST_CASE("fresh params predict exactly zero and count excludes metadata") {
    auto arch = tiny_arch();
    Rng rng(17);
    auto params = init_denoiser_params(arch, rng);
    CHECK(param_count(params) > 0);
    // Metadata entries do not contribute trainable scalars.
    int64_t manual = 0;
    for (const auto& [name, t] : params)
        if (name != "__arch__") manual += t.numel();
    CHECK(param_count(params) == manual);

    TapeF tp(false);
    Rng rng2(1);
    auto x = randn<float>({2, 3, 8, 8}, rng2);
    auto out = predict_eps<float>(tp, params, arch, x, 10, Tensor{}, Tensor{}, {0, 1});
    CHECK(out.shape() == x.shape());
    for (float v : out.vec()) CHECK(v == 0.f);
}

TEST_CASE("predict_eps is bitwise deterministic and zero-cond-invariant") {
    auto arch = tiny_arch();
    Rng rng(21);
    auto params = init_denoiser_params(arch, rng);
    // Perturb the zero-initialized layers so the output is nontrivial.
    fill_normal(params.at("out.conv.w"), rng, 0.05);
    fill_normal(params.at("mid.attn.wo.w"), rng, 0.05);

    Rng rng2(2);
    auto x = randn<float>({2, 3, 8, 8}, rng2);
    auto cond_zero = Tensor::zeros({3, 8, 8});
    TapeF tp(false);
    auto a = predict_eps<float>(tp, params, arch, x, 7, Tensor{}, Tensor{}, {0, 1});
    auto b = predict_eps<float>(tp, params, arch, x, 7, Tensor{}, Tensor{}, {0, 1});
    CHECK(bitwise_equal(a, b));
    auto z = predict_eps<float>(tp, params, arch, x, 7, cond_zero, Tensor{}, {0, 1});
    CHECK(bitwise_equal(a, z));
    bool any_nonzero = false;
    for (float v : a.vec()) any_nonzero |= (v != 0.f);
    CHECK(any_nonzero);
}

TEST_CASE("predict_eps is bitwise equivariant to frame permutation") {
    auto arch = tiny_arch();
    Rng rng(31);
    auto params = init_denoiser_params(arch, rng);
    fill_normal(params.at("out.conv.w"), rng, 0.05);
    for (int l = 0; l < ArchConfig::kAttnLayers; l++)
        fill_normal(params.at(std::string(ArchConfig::attn_name(l)) + ".wo.w"), rng, 0.05);

    const int F = 3;
    Rng rng2(4);
    auto x = randn<float>({F, 3, 8, 8}, rng2);
    auto cond = randn<float>({3, 8, 8}, rng2, 0.5);
    auto emb = randn<float>({8}, rng2, 0.5);
    TapeF tp(false);
    auto base = predict_eps<float>(tp, params, arch, x, 5, cond, emb, {0, 1, 2});

    const std::vector<int> perm = {2, 0, 1}; // storage f holds original frame perm[f]
    auto xp = Tensor::zeros({F, 3, 8, 8});
    const int fs = 3 * 8 * 8;
    for (int f = 0; f < F; f++)
        std::copy(x.data() + perm[f] * fs, x.data() + (perm[f] + 1) * fs, xp.data() + f * fs);
    std::vector<int> slots = {perm[0], perm[1], perm[2]};
    auto out = predict_eps<float>(tp, params, arch, xp, 5, cond, emb, slots);
    for (int f = 0; f < F; f++)
        for (int i = 0; i < fs; i++) {
            const float want = base.data()[perm[f] * fs + i];
            const float got = out.data()[f * fs + i];
            CHECK(std::memcmp(&want, &got, sizeof(float)) == 0);
        }
}

TEST_CASE("predict_eps validates shapes, slots, and steps") {
    auto arch = tiny_arch();
    Rng rng(41);
    auto params = init_denoiser_params(arch, rng);
    TapeF tp(false);
    auto x = Tensor::zeros({2, 3, 8, 8});
    CHECK_THROWS_AS(
        predict_eps<float>(tp, params, arch, Tensor::zeros({2, 3, 8, 4}), 1, {}, {}, {0, 1}),
        ShapeError);
    CHECK_THROWS_AS(predict_eps<float>(tp, params, arch, x, 1, {}, {}, {0}), ShapeError);
    CHECK_THROWS_AS(predict_eps<float>(tp, params, arch, x, 1, {}, {}, {0, 9}),
                    InvalidArgError);
    CHECK_THROWS_AS(predict_eps<float>(tp, params, arch, x, 999, {}, {}, {0, 1}),
                    InvalidArgError);
    CHECK_THROWS_AS(predict_eps<float>(tp, params, arch, x, 1, Tensor::zeros({3, 4, 4}), {},
                                       {0, 1}),
                    ShapeError);
}

TEST_CASE("non-finite activations raise a numeric error naming the layer") {
    auto arch = tiny_arch();
    Rng rng(43);
    auto params = init_denoiser_params(arch, rng);
    TapeF tp(false);
    auto x = Tensor::zeros({1, 3, 8, 8});
    x.data()[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_WITH_AS(predict_eps<float>(tp, params, arch, x, 1, {}, {}, {0}),
                         doctest::Contains("enc1"), NumericError);
}

TEST_CASE("encode_condition is deterministic and separates inputs") {
    auto arch = tiny_arch();
    Rng rng(51);
    auto params = init_denoiser_params(arch, rng);
    TapeF tp(false);
    Rng rng2(6);
    auto img_a = randn<float>({3, 8, 8}, rng2, 0.5);
    auto img_b = randn<float>({3, 8, 8}, rng2, 0.5);
    auto ea = encode_condition<float>(tp, params, arch, img_a);
    auto ea2 = encode_condition<float>(tp, params, arch, img_a);
    CHECK(bitwise_equal(ea, ea2));
    auto eb = encode_condition<float>(tp, params, arch, img_b);
    double d = 0;
    for (int i = 0; i < 8; i++) d += std::fabs(ea.data()[i] - eb.data()[i]);
    CHECK(d > 0.0);
    // Null conditioning is exactly the zero vector.
    auto nul = null_embedding<float>(arch);
    for (float v : nul.vec()) CHECK(v == 0.f);
    CHECK_THROWS_AS(encode_condition<float>(tp, params, arch, Tensor::zeros({3, 4, 4})),
                    ShapeError);
}

TEST_CASE("checkpoint roundtrip preserves params and embedded arch") {
    auto arch = tiny_arch();
    Rng rng(61);
    auto params = init_denoiser_params(arch, rng);
    const auto tmp =
        (std::filesystem::temp_directory_path() / "trimix_model_ckpt.tmx").string();
    save_checkpoint(tmp, params);
    auto back = load_checkpoint(tmp);
    REQUIRE(back.size() == params.size());
    for (const auto& [name, t] : params) CHECK(bitwise_equal(t, back.at(name)));
    auto arch2 = get_arch(back);
    CHECK(arch2.resolution == arch.resolution);
    CHECK(arch2.base_channels == arch.base_channels);
    CHECK(arch2.T == arch.T);
    CHECK(arch2.beta_end == arch.beta_end);
    std::filesystem::remove(tmp);
}

TEST_CASE("model gradients agree with finite differences in 64-bit mode") {
    auto arch = tiny_arch();
    Rng rng(71);
    auto params32 = init_denoiser_params(arch, rng);
    fill_normal(params32.at("out.conv.w"), rng, 0.05);
    for (int l = 0; l < ArchConfig::kAttnLayers; l++)
        fill_normal(params32.at(std::string(ArchConfig::attn_name(l)) + ".wo.w"), rng, 0.05);
    auto params = widen_dict(params32);

    Rng rng2(7);
    auto x0 = randn<double>({2, 3, 8, 8}, rng2);
    auto cond = randn<double>({3, 8, 8}, rng2, 0.5);
    auto target = randn<double>({2, 3, 8, 8}, rng2);

    auto loss_for = [&](const std::string& pname) {
        return [&, pname](TapeD& tp, const Tensor64& p) {
            // Rebind the probed tensor inside a copied dict.
            TensorDict64 d = params;
            d.put(pname, p);
            auto emb = encode_condition<double>(tp, d, arch, cond);
            auto out = predict_eps<double>(tp, d, arch, x0, 9, cond, emb, {0, 1});
            return op::mse(tp, out, target);
        };
    };

    for (const char* pname : {"enc2.attn.cam", "out.conv.b", "dec1.tproj.w", "emb.conv2.b"}) {
        auto probe = params.at(pname);
        INFO(pname);
        CHECK(grad_check<double>(loss_for(pname), probe, 1e-5) <= 1e-5);
    }

    // Input gradient through the whole net.
    auto f_x = [&](TapeD& tp, const Tensor64& xin) {
        auto out = predict_eps<double>(tp, params, arch, xin, 9, cond, Tensor64{}, {0, 1});
        return op::mse(tp, out, target);
    };
    CHECK(grad_check<double>(f_x, x0, 1e-5) <= 1e-5);
}

TEST_CASE("sampling is reproducible and shape-correct") {
    auto arch = tiny_arch();
    Rng rng(81);
    auto params = init_denoiser_params(arch, rng);
    fill_normal(params.at("out.conv.w"), rng, 0.02);
    SampleConfig cfg;
    cfg.steps = 5;
    cfg.view_count = 2;
    cfg.seed = 33;
    cfg.cfg_scale = 2.f;
    Rng rc(9);
    auto cond = randn<float>({3, 8, 8}, rc, 0.3);
    TapeF tp(false);
    auto emb = encode_condition<float>(tp, params, arch, cond);
    auto a = sample_multiview<float>(params, arch, cond, emb, cfg);
    auto b = sample_multiview<float>(params, arch, cond, emb, cfg);
    CHECK(a.shape() == Shape{2, 3, 8, 8});
    CHECK(bitwise_equal(a, b));
    SampleConfig cfg2 = cfg;
    cfg2.seed = 34;
    auto c = sample_multiview<float>(params, arch, cond, emb, cfg2);
    CHECK(!bitwise_equal(a, c));
}
