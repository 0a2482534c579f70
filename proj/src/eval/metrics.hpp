#pragma once

#include <array>

#include "render/image.hpp"

namespace trimix {

// ============================================================
// Image metrics (deterministic pure functions)
// ============================================================

// Peak signal-to-noise ratio between two [0,1] RGB images, 10*log10(1/MSE),
// capped at 60 dB (identical images hit the cap).
double psnr(const Image& a, const Image& b);

// Convenience for model-range [-1,1] planar tensors: both are clamped and
// mapped to [0,1] through the canonical tensor->image conversion first.
double psnr_model_range(const Tensor& a, const Tensor& b);

// Intersection-over-union of two binary masks; 1 when both are empty.
double silhouette_iou(const Mask& a, const Mask& b);

// 8-bin-per-channel RGB histogram over the masked foreground; each channel's
// 8 bins are normalized to sum 1 (24 entries total, channel-major).
std::array<double, 24> foreground_histogram(const Image& img, const Mask& mask);

// Chi-square distance 0.5 * sum (a-b)^2 / (a+b) over all 24 bins (terms with
// a+b = 0 are skipped). Symmetric; 0 iff the histograms match; at most 2 per
// differing channel pair of one-hot histograms.
double chi_square(const std::array<double, 24>& a, const std::array<double, 24>& b);

// Chi-square between img's masked foreground histogram and the reference
// image's foreground, which is auto-masked by the exact background key color
// (reference images are dataset renders, so the key recovers exactly).
double appearance_distance(const Image& img, const Mask& mask, const Image& reference);

// Hue (degrees, [0,360)) of the mean foreground color. Throws ContractError
// on an empty mask and NumericError when the mean color carries no chroma.
double dominant_hue(const Image& img, const Mask& mask);

// Reindexes a hue for ordering comparisons: the circle is cut at the
// background key color's hue (300 degrees, magenta), which the material
// catalog avoids, so material hue orderings never straddle the wrap.
double hue_order_key(double hue_degrees);

} // namespace trimix
