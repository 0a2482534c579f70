#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "model/unet.hpp"
#include "render/dataset.hpp"

namespace trimix {

struct BaseTrainConfig {
    double lr = 2e-4;
    int steps = 10000;
    uint64_t seed = 0;
    double cond_dropout = 0.1; // zero concat + null embedding together
    int ckpt_interval = 1000;
    int log_interval = 100;

    void validate() const;
};

Json to_json(const BaseTrainConfig& c);
BaseTrainConfig base_train_config_from_json(const Json& j);

// One (shape, material) orbit set with its conditioning view, fully loaded.
struct OrbitSet {
    Tensor views; // [F,3,R,R]
    Tensor cond;  // [3,R,R]
    std::vector<int> slots;
    std::string shape_name;
    std::string material_name;
    std::string split;
};

// Loads every orbit set in the manifest (the adaptation split only governs
// which transfer pairings are trained on later).
std::vector<OrbitSet> load_orbit_sets(const Manifest& man);

struct BaseTrainResult {
    TensorDict params;
    std::vector<float> losses; // one entry per step
};

// Denoising-objective pretraining. Per step, draw order from the seed stream:
// orbit set index, timestep, noise, dropout coin. Emits the checkpoint at
// every interval and at the end; a non-finite loss aborts with the step
// index. Logging goes to `log` when non-null.
BaseTrainResult train_base(const Manifest& man, const ArchConfig& arch,
                           const BaseTrainConfig& cfg, const std::string& ckpt_path,
                           std::ostream* log = nullptr);

// Mean loss of each disjoint window; divergence shows up as an increase.
std::vector<float> window_means(const std::vector<float>& losses, int window);

} // namespace trimix
