#include "eval/heatmap.hpp"

#include "core/error.hpp"

namespace trimix {

Image heatmap_image(const std::vector<std::array<double, 3>>& table, int layers, int frames,
                    int cell) {
    if (layers < 1 || frames < 1 || cell < 1)
        throw InvalidArgError("heatmap: positive dims required");
    if (int64_t(table.size()) != int64_t(layers) * frames)
        throw ContractError("heatmap: table size does not match layers*frames");
    Image img(layers * cell, frames * cell);
    for (int l = 0; l < layers; l++)
        for (int f = 0; f < frames; f++) {
            const auto& a = table[size_t(l) * frames + f];
            float rgb[3];
            for (int c = 0; c < 3; c++)
                rgb[c] = float(a[0] * kHeatObject[c] + a[1] * kHeatReference[c] +
                               a[2] * kHeatMain[c]);
            for (int y = l * cell; y < (l + 1) * cell; y++)
                for (int x = f * cell; x < (f + 1) * cell; x++) {
                    float* p = img.px(y, x);
                    p[0] = rgb[0];
                    p[1] = rgb[1];
                    p[2] = rgb[2];
                }
        }
    return img;
}

void heatmap_png(const std::vector<std::array<double, 3>>& table, int layers, int frames,
                 const std::string& path, int cell) {
    write_png(path, heatmap_image(table, layers, frames, cell));
}

void mix_heatmap_png(const MixWeights& mw, int frames, const std::string& path, bool argmax,
                     int cell) {
    auto table = alpha_table(mw, frames);
    if (argmax)
        for (auto& a : table) a = argmax_select(a);
    heatmap_png(table, mw.layers(), frames, path, cell);
}

} // namespace trimix
