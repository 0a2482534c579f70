#pragma once

#include <array>
#include <string>

#include "core/checkpoint.hpp"
#include "core/ops.hpp"
#include "model/arch.hpp"

namespace trimix {

// ============================================================
// Learnable attention-mixing weights
// ============================================================
//
// One logit triple per (attention layer, frame) in stream order
// [object, reference, main]. Softmax turns a triple into convex mixing
// coefficients; with per_frame = false a single triple per layer is
// broadcast over all frames.

struct MixWeights {
    Tensor logits;   // [S, F, 3] (per_frame) or [S, 1, 3]
    bool per_frame = true;
    int frames = 0;  // configured F (logits dim 1 when per_frame)

    int layers() const { return logits.defined() ? int(logits.dim(0)) : 0; }

    void validate(const ArchConfig& arch) const;
};

// Stream indices within a logit triple.
inline constexpr int kStreamObject = 0;
inline constexpr int kStreamReference = 1;
inline constexpr int kStreamMain = 2;

// Zero-initialized (uniform 1/3 alphas) weights for S layers and F frames.
MixWeights init_mix_weights(int layers, int frames, bool per_frame);

// Inference-side alphas for one (layer, frame) cell: softmax of the logit
// triple, computed in double precision. Frame index ignores per_frame=false
// broadcasting only in the sense that every frame returns the same triple.
std::array<double, 3> alphas_from_logits(const MixWeights& mw, int layer, int frame);

// One-hot projection of an alpha triple. Ties break by fixed priority
// main > object > reference.
std::array<double, 3> argmax_select(const std::array<double, 3>& alphas);

// Differentiable per-frame convex combination of the three streams' K (or V)
// token tensors. k_*: [F,P,C]; alphas: [F,3] (rows sum to 1) or [1,3]
// broadcast. When every frame puts all mass on a single stream s with weight
// exactly 1, the input tensor handle for s is returned untouched, so the
// downstream attention is bitwise identical to an unmixed pass.
template <typename T>
TensorT<T> mix_tokens(Tape<T>& tp, const TensorT<T>& t_obj, const TensorT<T>& t_ref,
                      const TensorT<T>& t_main, const TensorT<T>& alphas);

// Tape-path alphas for one layer: slice row `layer` of the logits tensor and
// softmax it, yielding [F,3] (or [1,3]). Gradients flow back into `logits`.
template <typename T>
TensorT<T> layer_alphas(Tape<T>& tp, const TensorT<T>& logits, int layer);

// Snapshot of the full alpha table (softmax applied cellwise), shape
// [S, F, 3] with per_frame=false rows broadcast to F.
std::vector<std::array<double, 3>> alpha_table(const MixWeights& mw, int frames);

// Mean entropy (nats) of the alpha triples at one layer.
double layer_entropy(const MixWeights& mw, int layer, int frames);

// Checkpoint I/O: TMX1 dict with the tensor entry "mix.logits" plus a JSON
// config entry describing the layout.
void save_mix_weights(const std::string& path, const MixWeights& mw);
MixWeights load_mix_weights(const std::string& path);

// Human-readable per-layer/per-frame alpha table with entropies.
std::string weight_report(const MixWeights& mw, int frames);

} // namespace trimix
