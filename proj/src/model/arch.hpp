#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/checkpoint.hpp"
#include "model/schedule.hpp"

namespace trimix {

// ============================================================
// Architecture config: fully determines the network and schedule
// ============================================================
//
// Channels base_c -> 2x -> 4x over resolutions R -> R/2 -> R/4, with joint
// view-spatial self-attention at R/2 and R/4 on both paths plus the
// bottleneck: five attention layers in forward order.
struct ArchConfig {
    int resolution = 32;   // square input, divisible by 4
    int base_channels = 32;
    int emb_dim = 64;      // conditioning embedding width
    int time_dim = 64;     // timestep embedding width after the MLP
    int sin_dim = 32;      // raw sinusoidal width (even)
    int groups = 8;        // group-norm groups
    int camera_slots = 4;  // learned per-view camera embedding rows
    int T = 200;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    void validate() const;
    NoiseSchedule schedule() const { return NoiseSchedule(T, beta_start, beta_end); }

    // Attention layer registry, forward order. Index is the layer id used by
    // mixing weights and hooks.
    static constexpr int kAttnLayers = 5;
    static const char* attn_name(int layer);
    // Layers on the decoding half (bottleneck included): the manual-mixing
    // baseline targets these.
    static std::vector<int> decoder_side_layers() { return {2, 3, 4}; }
};

nlohmann::json to_json(const ArchConfig& a);
ArchConfig arch_from_json(const nlohmann::json& j);

// Checkpoint embedding: the config rides inside the tensor dict.
void put_arch(TensorDict& d, const ArchConfig& a);
ArchConfig get_arch(const TensorDict& d);

} // namespace trimix
