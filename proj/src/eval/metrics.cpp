#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace trimix {

double psnr(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError("psnr: image dimensions differ");
    if (a.height < 1 || a.width < 1) throw InvalidArgError("psnr: empty image");
    double mse = 0;
    for (size_t i = 0; i < a.rgb.size(); i++) {
        const double d = double(a.rgb[i]) - double(b.rgb[i]);
        mse += d * d;
    }
    mse /= double(a.rgb.size());
    if (mse <= 0) return 60.0;
    return std::min(60.0, 10.0 * std::log10(1.0 / mse));
}

double psnr_model_range(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("psnr: tensor shapes differ");
    return psnr(tensor_to_image(a), tensor_to_image(b));
}

double silhouette_iou(const Mask& a, const Mask& b) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError("silhouette_iou: mask dimensions differ");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.on.size(); i++) {
        const bool pa = a.on[i] != 0, pb = b.on[i] != 0;
        inter += (pa && pb);
        uni += (pa || pb);
    }
    if (uni == 0) return 1.0; // both empty: nothing to disagree about
    return double(inter) / double(uni);
}

std::array<double, 24> foreground_histogram(const Image& img, const Mask& mask) {
    if (img.height != mask.height || img.width != mask.width)
        throw ShapeError("foreground_histogram: mask does not match the image");
    std::array<double, 24> h{};
    int64_t n = 0;
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            if (!mask.at(y, x)) continue;
            n++;
            const float* p = img.px(y, x);
            for (int c = 0; c < 3; c++) {
                const float v = std::min(1.f, std::max(0.f, p[c]));
                const int bin = std::min(7, int(v * 8.f));
                h[size_t(c * 8 + bin)] += 1.0;
            }
        }
    if (n == 0) throw ContractError("foreground_histogram: empty foreground");
    for (double& v : h) v /= double(n); // each channel's 8 bins sum to 1
    return h;
}

double chi_square(const std::array<double, 24>& a, const std::array<double, 24>& b) {
    double d = 0;
    for (size_t i = 0; i < a.size(); i++) {
        const double s = a[i] + b[i];
        if (s <= 0) continue;
        const double diff = a[i] - b[i];
        d += diff * diff / s;
    }
    return 0.5 * d;
}

double appearance_distance(const Image& img, const Mask& mask, const Image& reference) {
    const auto ref_mask = key_color_mask(reference);
    return chi_square(foreground_histogram(img, mask),
                      foreground_histogram(reference, ref_mask));
}

double dominant_hue(const Image& img, const Mask& mask) {
    if (img.height != mask.height || img.width != mask.width)
        throw ShapeError("dominant_hue: mask does not match the image");
    double r = 0, g = 0, b = 0;
    int64_t n = 0;
    for (int y = 0; y < img.height; y++)
        for (int x = 0; x < img.width; x++) {
            if (!mask.at(y, x)) continue;
            const float* p = img.px(y, x);
            r += p[0];
            g += p[1];
            b += p[2];
            n++;
        }
    if (n == 0) throw ContractError("dominant_hue: empty foreground");
    r /= double(n);
    g /= double(n);
    b /= double(n);
    const double mx = std::max(r, std::max(g, b));
    const double mn = std::min(r, std::min(g, b));
    const double chroma = mx - mn;
    if (chroma < 1e-6) throw NumericError("dominant_hue: mean foreground color has no chroma");
    double h;
    if (mx == r)
        h = std::fmod((g - b) / chroma + 6.0, 6.0);
    else if (mx == g)
        h = (b - r) / chroma + 2.0;
    else
        h = (r - g) / chroma + 4.0;
    return h * 60.0;
}

double hue_order_key(double hue_degrees) {
    double h = std::fmod(hue_degrees - 300.0, 360.0);
    if (h < 0) h += 360.0;
    return h;
}

} // namespace trimix
