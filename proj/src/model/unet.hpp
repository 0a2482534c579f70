#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "model/arch.hpp"

namespace trimix {

// Called at every attention layer with the freshly projected K/V token
// tensors [F, P, C]; whatever it returns is attended over. Identity when
// empty. The attention-mixing machinery both captures and substitutes K/V
// through this single seam.
template <typename T>
using KvHook =
    std::function<std::pair<TensorT<T>, TensorT<T>>(int layer, const TensorT<T>& k,
                                                    const TensorT<T>& v)>;

// Fresh parameter dict for the denoiser + conditioning embedder. The final
// output conv and every attention out-projection start at zero, so the
// initial eps prediction is exactly zero and the initial loss sits at the
// unit-noise baseline.
TensorDict init_denoiser_params(const ArchConfig& arch, Rng& rng);

// Number of trainable scalars (sanity checks and logs).
template <typename T>
int64_t param_count(const DictT<T>& params);

// Conditioning embedder: [3,R,R] image in [-1,1] -> [emb_dim] vector.
template <typename T>
TensorT<T> encode_condition(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                            const TensorT<T>& image);

// The distinguished unconditional embedding: exactly zero.
template <typename T>
TensorT<T> null_embedding(const ArchConfig& arch) {
    return TensorT<T>::zeros({arch.emb_dim});
}

// Joint view-spatial U-Net forward.
//   x          [F,3,R,R] noisy frames
//   t          schedule step, in [0, T]
//   cond       [3,R,R] conditioning image concatenated to every frame;
//              undefined = unconditional (concat channels zeroed)
//   emb        [emb_dim] global conditioning embedding; undefined = null
//   slots      per-frame camera embedding indices, size F
// Returns the eps prediction [F,3,R,R].
template <typename T>
TensorT<T> predict_eps(Tape<T>& tp, const DictT<T>& params, const ArchConfig& arch,
                       const TensorT<T>& x, int t, const TensorT<T>& cond,
                       const TensorT<T>& emb, const std::vector<int>& slots,
                       const KvHook<T>& hook = {});

} // namespace trimix
