#pragma once

#include <optional>

#include <json.hpp>

#include "model/sampler.hpp"
#include "model/unet.hpp"
#include "tristream/mix.hpp"

namespace trimix {

using Json = nlohmann::json;

// ============================================================
// Three-stream appearance-transfer sampler
// ============================================================
//
// Three denoising streams share one frozen denoiser. The object and
// reference streams run unmodified; the main stream's self-attention layers
// swap their keys/values for a learned convex combination of all three
// streams' K/V, captured from the side streams' conditional passes at the
// same layer and step.

struct TriStreamConfig {
    float cfg_main = 5.0f;
    float cfg_object = 2.0f;
    float cfg_reference = 2.0f;
    bool argmax = false;            // one-hot mixing at inference
    bool unconditional_main = true; // main: zero concat, mean(object,reference) embedding
    bool extra_frame = false;       // extra frame at the input camera pose, dropped at the end
    bool shared_init_noise = true;
    int steps = 50;
    int view_count = 4;
    uint64_t seed = 0;

    void validate() const;
};

Json to_json(const TriStreamConfig& c);
TriStreamConfig tri_stream_config_from_json(const Json& j);

// Latents plus per-stream conditioning at one timestep.
struct StreamBundle {
    Tensor object_x, reference_x, main_x; // [F,3,R,R]
    Tensor object_cond, reference_cond;   // [3,R,R]
    Tensor main_cond;                     // undefined when the main stream is unconditional
    Tensor object_emb, reference_emb, main_emb;
    int t = 0;
};

// Per-layer K/V recorded from a stream's conditional pass.
template <typename T>
struct KvCapture {
    std::vector<TensorT<T>> k, v; // one slot per attention layer
};

// Hook that records K/V at each layer and passes them through unchanged.
template <typename T>
KvHook<T> capture_kv_hook(KvCapture<T>& cap);

// Hook that replaces the main stream's K/V with the per-frame convex mix of
// the three streams at each layer. alphas[l] is [F,3] (or [1,3] broadcast).
template <typename T>
KvHook<T> mixing_hook(Tape<T>& tp, const KvCapture<T>& obj, const KvCapture<T>& ref,
                      const std::vector<TensorT<T>>& alphas);

// Constant per-layer alpha tensors for inference from trained weights,
// optionally argmax-projected to exact one-hots. `frames` may exceed the
// stored frame rows (the extra frame reuses frame 0's triple).
std::vector<Tensor> inference_alphas(const MixWeights& mw, int frames, bool argmax);

// Advances all three streams from bundle.t to t_next. Side streams denoise
// under their own conditioning and CFG scales; the main stream mixes K/V
// (sourcing the side streams' conditional-pass captures in both its
// conditional and unconditional passes).
void tri_stream_denoise_step(const TensorDict& params, const ArchConfig& arch,
                             const NoiseSchedule& sched, StreamBundle& bundle,
                             const MixWeights& mw, const TriStreamConfig& cfg, int t_next,
                             const std::vector<int>& slots);

// Overwrites the reference stream with the clean multiview reference noised
// to the bundle's current t, so its K/V reflect the given views at the
// current noise level.
void reference_latent_replacement(const NoiseSchedule& sched, const Tensor& clean_views,
                                  StreamBundle& bundle, Rng& rng);

struct TransferResult {
    Tensor main_views;      // [F,3,R,R] transferred output
    Tensor object_views;    // [F,3,R,R] object stream's own output (silhouette baseline)
    Tensor reference_views; // [F,3,R,R] reference stream's own output
};

// Full transfer loop. reference_views (optional, [F,3,R,R] clean frames)
// activates per-step latent replacement in the reference stream;
// reference_image still supplies that stream's conditioning.
TransferResult sample_transfer(const TensorDict& params, const ArchConfig& arch,
                               const Tensor& object_image, const Tensor& reference_image,
                               const MixWeights& mw, const TriStreamConfig& cfg,
                               const std::optional<Tensor>& reference_views = std::nullopt);

} // namespace trimix
