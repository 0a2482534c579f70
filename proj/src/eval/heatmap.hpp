#pragma once

#include "render/image.hpp"
#include "tristream/mix.hpp"

namespace trimix {

// ============================================================
// Mixing-weight heatmaps
// ============================================================
//
// One cell per (layer, frame): layers on the vertical axis, frames on the
// horizontal axis. Cell color is the convex blend of red (object stream),
// grey (reference stream), and blue (main stream) by the cell's alphas, so
// an argmax-ed table renders in the three pure colors only.

inline constexpr float kHeatObject[3] = {1.f, 0.f, 0.f};
inline constexpr float kHeatReference[3] = {0.5f, 0.5f, 0.5f};
inline constexpr float kHeatMain[3] = {0.f, 0.f, 1.f};

// `table` is layer-major with `layers*frames` entries (alpha_table layout);
// each cell is drawn as a `cell`x`cell` block (nearest-neighbor upscale).
Image heatmap_image(const std::vector<std::array<double, 3>>& table, int layers, int frames,
                    int cell = 16);

void heatmap_png(const std::vector<std::array<double, 3>>& table, int layers, int frames,
                 const std::string& path, int cell = 16);

// Renders trained weights directly, broadcasting per-layer triples across
// `frames` columns.
void mix_heatmap_png(const MixWeights& mw, int frames, const std::string& path,
                     bool argmax = false, int cell = 16);

} // namespace trimix
