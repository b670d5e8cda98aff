#pragma once

#include "mason/array_io.hpp"
#include "mason/common.hpp"

namespace mason {

/// Per-pixel sum of all channels. Each pixel's channel values are summed in
/// ascending order, so the result does not depend on channel order.
RawMap sum_activations(const FeatureMapStack& stack);

/// Affine rescale to [0,255]: min -> 0, max -> 255. A constant map becomes all zeros.
Heatmap normalize(const RawMap& raw);

/// Catmull-Rom (a = -0.5) cubic convolution kernel.
double cubic_kernel(double x) noexcept;

/// Source coordinate sampled by output index `dst` when resizing `src_len` -> `dst_len`
/// (pixel centers aligned).
double source_coordinate(int dst, int src_len, int dst_len) noexcept;

/// Separable bicubic resize to a size at least as large as the input. Out-of-range
/// taps replicate the edge sample; results are clamped to [0,255].
/// Throws InvalidTarget when the target is smaller than the source in either axis.
Heatmap bicubic_upscale(const Heatmap& map, int target_height, int target_width);

/// sum -> normalize -> upscale to the image size.
Heatmap objectness(const FeatureMapStack& stack, int image_height, int image_width);

/// Trimap from a heatmap: above the mean -> sure foreground, (0, mean] -> probable
/// foreground, exactly 0 -> probable background. Sure background is never produced.
Trimap stratify(const Heatmap& heatmap);

double mean_intensity(const Heatmap& heatmap);

}  // namespace mason
