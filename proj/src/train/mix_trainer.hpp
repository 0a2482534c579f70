#pragma once

#include <iosfwd>

#include "render/dataset.hpp"
#include "tristream/sampler.hpp"

namespace trimix {

// ============================================================
// Few-shot adaptation of the mixing weights (base frozen)
// ============================================================

struct AdaptConfig {
    double lr = 1e-2;
    int steps = 300;
    uint64_t seed = 0;
    bool per_frame = true;
    // Timesteps are drawn uniformly from [t_lo_frac*T, t_hi_frac*T]; the
    // extremes of the schedule carry little appearance signal.
    double t_lo_frac = 0.1;
    double t_hi_frac = 0.9;
    int log_interval = 50;

    void validate() const;
};

Json to_json(const AdaptConfig& c);
AdaptConfig adapt_config_from_json(const Json& j);

// One triplet's tensors at the working precision.
template <typename T>
struct TripletTensors {
    TensorT<T> object_views;    // [F,3,R,R]
    TensorT<T> object_cond;     // [3,R,R]
    TensorT<T> reference_views; // [F,3,R,R]
    TensorT<T> reference_cond;  // [3,R,R]
    TensorT<T> target_views;    // [F,3,R,R]
};

TripletTensors<float> triplet_tensors(const TripletData& d);
TripletTensors<double> widen_triplet(const TripletTensors<float>& d);

// Teacher-forced main-stream diffusion loss for one (triplet, t, eps) draw.
// All three streams are noised with the same eps at the same t; the side
// streams run conditional no-grad passes to capture K/V; the main stream
// runs unconditionally (mean side embedding) with soft mixing from `logits`,
// and the returned scalar is ||eps - eps_main||^2. Gradients reach only
// `logits`.
template <typename T>
TensorT<T> mix_step_loss(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                         const NoiseSchedule& sched, const TripletTensors<T>& data,
                         const TensorT<T>& logits, int t, const TensorT<T>& eps);

struct MixTrainResult {
    MixWeights mw;
    std::vector<float> losses;   // one entry per step
    int64_t trainable_count = 0; // number of scalars the optimizer touched
};

// Optimizes the mixing logits with Adam while asserting the base checkpoint
// stays bitwise frozen. Per step, the seed stream draws: triplet index, then
// t, then eps. A non-finite loss aborts with the step index. `init`
// optionally seeds the logits (layout must match the config); a stream
// column pinned to -1e9 keeps exactly zero softmax mass and zero gradient,
// which is how a stream is disabled during training.
MixTrainResult train_mix(const Manifest& man, const TensorDict& base,
                         const std::vector<TripletRef>& triplets, const AdaptConfig& cfg,
                         std::ostream* log = nullptr, const MixWeights* init = nullptr);

// Deterministic held-out measuring stick: mean teacher-forced loss over
// `count` fixed (triplet, t, eps) draws from `probe_seed`.
double mix_probe_loss(const TensorDict& base, const ArchConfig& arch,
                      const std::vector<TripletData>& data, const MixWeights& mw, int count,
                      uint64_t probe_seed);

} // namespace trimix
