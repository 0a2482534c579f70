#pragma once

#include <iosfwd>

#include "eval/report.hpp"
#include "train/mix_trainer.hpp"

namespace trimix {

// ============================================================
// Ablation ladder
// ============================================================
//
// Seven variants, each adding one ingredient, every rung scored on the same
// held-out triplet with a heatmap and a metric report:
//   1 manual-decoder-reference  fixed alpha_r=1 at the bottleneck and
//                               upsampling attention layers, no training
//   2 two-stream-trained        gradient-trained, object stream disabled
//   3 three-stream-trained      all three streams, one triple per layer
//   4 per-frame-mixing          per-(layer,frame) triples
//   5 unconditional-main        main stream drops its concat conditioning
//   6 cfg-main-5                classifier-free guidance 5.0 on main
//   7 argmax-inference          one-hot mixing at inference

struct AblationConfig {
    AdaptConfig adapt;        // shared training knobs for the trained rungs
    TriStreamConfig transfer; // shared inference knobs (steps, seed, cfg sides)
    int train_triplet = 0;    // index into the train-split triplet list
    int eval_triplet = 0;     // index into the held-out-split triplet list
    float mask_tol = 0.25f;   // foreground threshold for generated images

    void validate() const;
};

Json to_json(const AblationConfig& c);
AblationConfig ablation_config_from_json(const Json& j);

struct RungResult {
    int rung = 0;
    std::string name;
    MixWeights mw;
    EvalReport report;
    double mean_psnr = 0;
};

struct AblationResult {
    std::vector<RungResult> rungs;
    std::string dir;
};

// The attention layers treated as "decoder-side" by the manual baseline:
// the bottleneck plus the upsampling path.
std::vector<int> decoder_side_layers();

// Mixing weights for rung 1: alpha_r = 1 at the decoder-side layers,
// alpha_m = 1 everywhere else, one triple per layer.
MixWeights manual_decoder_weights(int frames);

// Runs the full ladder. Writes, under out_dir: config.json, summary.json,
// and per rung a directory with heatmap.png, report.csv, report.json, and
// the transferred main views as PNGs. Training results are reused across
// rungs whose training configuration is identical (5-7 share rung 4's
// weights; by seed-determinism this is bitwise equal to retraining).
AblationResult run_ablation(const Manifest& man, const TensorDict& base,
                            const AblationConfig& cfg, const std::string& out_dir,
                            std::ostream* log = nullptr);

} // namespace trimix
