#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace trimix {

// ============================================================
// Image: H x W x 3 float RGB in [0,1], row-major, interleaved
// ============================================================
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> rgb; // size H*W*3

    Image() = default;
    Image(int h, int w) : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, 0.f) {}

    float* px(int y, int x) { return rgb.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const float* px(int y, int x) const {
        return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

// Binary foreground mask, same layout as Image without channels.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> on; // 1 = foreground

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), on(static_cast<size_t>(h) * w, 0) {}

    uint8_t& at(int y, int x) { return on[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return on[static_cast<size_t>(y) * width + x]; }
    int64_t count() const;
};

// Background key color: pure magenta. Never produced by shading of the
// built-in material catalog, so masks recover exactly from stored files.
inline constexpr float kKeyR = 1.f, kKeyG = 0.f, kKeyB = 1.f;

// Round-to-nearest byte quantization, the single canonical float<->byte map.
uint8_t quantize_channel(float v);

// 8-bit RGB PNG io. Reads reject non-RGB / non-8-bit files.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Mask recovery: background iff the pixel quantizes to the key color exactly.
Mask key_color_mask(const Image& img);
// Tolerant variant for generated images: background iff the pixel lies within
// `tol` (max channel distance) of the key color.
Mask near_key_mask(const Image& img, float tol);

// Model-side range is [-1,1], planar [3,H,W]. Images clamp on the way out.
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

} // namespace trimix
