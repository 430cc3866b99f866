#pragma once

#include <array>

#include "styler/image.hpp"

namespace styler {

/// Per-sample v -> round(v (levels-1)) / (levels-1), ties to even.
/// levels must lie in [2, 256].
Image posterize(const Image& img, int levels);

/// Posterizes luma only; chroma is carried through.
Image luma_posterize(const Image& img, int levels);

/// luma -> min(1, factor * luma).
Image brightness(const Image& img, double factor);

/// 1 + tanh(min(0, phi (255 v - epsilon))) applied per channel. phi is a
/// slope per 8-bit level and epsilon a cutoff in 0..255 units.
Image soft_threshold(const Image& img, double phi, double epsilon);

template <typename Derived>
auto soft_threshold_expr(const Eigen::ArrayBase<Derived>& v, double phi, double epsilon) {
  return 1.0 + (phi * (255.0 * v - epsilon)).min(0.0).tanh();
}

/// clip(gray + s (rgb - gray)) on a 3-channel image.
Image saturate(const Image& img, double s);

/// Rotates (U,V) by `angle` radians then adds an RGB bias; clipped.
Image hue(const Image& img, double angle, const std::array<double, 3>& bias);

/// Monochrome palette: constant HSL hue/saturation, lightness = luma * lum_scale.
Image colorize(const Image& img, double hue_degrees, double saturation, double lum_scale);

/// Standard HSL -> RGB for h in degrees, s and l in [0,1].
std::array<double, 3> hsl_to_rgb(double h_degrees, double s, double l);

/// Percentile (0..100) of a plane estimated from a 256-bin histogram on [0,1]
/// with linear interpolation inside the bin.
double histogram_percentile(const Plane& values, double percent);

/// Maps the l-th luma percentile to 0 and the h-th to 1, clipped. A span
/// narrower than one 8-bit level leaves the image unchanged.
Image linear_equalize(const Image& img, double low_percent = 5.0, double high_percent = 95.0);

/// Stretches luma about the (p5+p95)/2 midpoint until the p5..p95 span
/// reaches `range` (0..255 units). Spans already wide enough are untouched.
Image min_dynamic_range(const Image& img, double range);

}  // namespace styler
