#include "render/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "core/error.hpp"

namespace trimix {

int64_t Mask::count() const {
    int64_t c = 0;
    for (uint8_t v : on) c += v ? 1 : 0;
    return c;
}

uint8_t quantize_channel(float v) {
    v = std::min(1.f, std::max(0.f, v));
    return static_cast<uint8_t>(std::lround(v * 255.f));
}

namespace {

struct FileCloser {
    FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

} // namespace

void write_png(const std::string& path, const Image& img) {
    if (img.height <= 0 || img.width <= 0)
        throw InvalidArgError("write_png: empty image for " + path);
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for write: " + path);
    FileCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; y++) {
        const float* src = img.px(y, 0);
        for (int i = 0; i < img.width * 3; i++) row[static_cast<size_t>(i)] = quantize_channel(src[i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open for read: " + path);
    FileCloser closer{f};

    uint8_t sig[8];
    if (std::fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8))
        throw FormatError("not a png file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png decode failed: " + path);
    }
    png_init_io(png, f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8 || color != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("expected 8-bit RGB png: " + path);
    }

    Image img(static_cast<int>(h), static_cast<int>(w));
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (png_uint_32 y = 0; y < h; y++) {
        png_read_row(png, row.data(), nullptr);
        float* dst = img.px(static_cast<int>(y), 0);
        for (size_t i = 0; i < row.size(); i++) dst[i] = static_cast<float>(row[i]) / 255.f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Mask key_color_mask(const Image& img) {
    Mask m(img.height, img.width);
    const uint8_t kr = quantize_channel(kKeyR), kg = quantize_channel(kKeyG),
                  kb = quantize_channel(kKeyB);
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            const float* p = img.px(y, x);
            const bool bg = quantize_channel(p[0]) == kr && quantize_channel(p[1]) == kg &&
                            quantize_channel(p[2]) == kb;
            m.at(y, x) = bg ? 0 : 1;
        }
    return m;
}

Mask near_key_mask(const Image& img, float tol) {
    Mask m(img.height, img.width);
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            const float* p = img.px(y, x);
            const float d = std::max({std::fabs(p[0] - kKeyR), std::fabs(p[1] - kKeyG),
                                      std::fabs(p[2] - kKeyB)});
            m.at(y, x) = d <= tol ? 0 : 1;
        }
    return m;
}

Tensor image_to_tensor(const Image& img) {
    auto t = Tensor::zeros({3, img.height, img.width});
    const int hw = img.height * img.width;
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            const float* p = img.px(y, x);
            const int i = y * img.width + x;
            for (int c = 0; c < 3; c++) t.data()[c * hw + i] = p[c] * 2.f - 1.f;
        }
    return t;
}

Image tensor_to_image(const Tensor& t) {
    if (t.rank() != 3 || t.dim(0) != 3)
        throw ShapeError("tensor_to_image expects [3,H,W], got " + shape_str(t.shape()));
    Image img(t.dim(1), t.dim(2));
    const int hw = img.height * img.width;
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            float* p = img.px(y, x);
            const int i = y * img.width + x;
            for (int c = 0; c < 3; c++) {
                float v = (t.data()[c * hw + i] + 1.f) * 0.5f;
                p[c] = std::min(1.f, std::max(0.f, v));
            }
        }
    return img;
}

} // namespace trimix
