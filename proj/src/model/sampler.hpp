#pragma once

#include "model/unet.hpp"

namespace trimix {

struct SampleConfig {
    int steps = 50;
    float cfg_scale = 1.5f; // 1 = conditional pass only
    uint64_t seed = 0;
    int view_count = 4;
};

// Deterministic DDIM sampling of a multiview set conditioned on one object
// image. Draw order: the initial latent noise is the first and only
// consumption from the seed stream. cfg_scale 1 runs a single conditional
// pass per step; otherwise the unconditional pass uses zeroed concat
// channels and the null embedding, combined via cfg_combine.
// Slots default to 0..F-1 when empty.
template <typename T>
TensorT<T> sample_multiview(const DictT<T>& params, const ArchConfig& arch,
                            const TensorT<T>& cond, const TensorT<T>& emb,
                            const SampleConfig& cfg, std::vector<int> slots = {});

} // namespace trimix
