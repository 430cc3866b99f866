#pragma once

#include "styler/image.hpp"

namespace styler {

/// Output dimension for a resampling ratio: round(n * scale), at least 1.
int scaled_extent(int n, double scale);

/// Bilinear resampling to round(w*scale) x round(h*scale). Pixel centers are
/// aligned (half-pixel convention); stashed chroma is resampled alongside.
Image resample(const Image& img, double scale);

/// Bilinear resampling to an explicit size.
Image resize(const Image& img, int width, int height);
Plane resize(const Plane& plane, int width, int height);

/// Downscale so that max(width, height) <= max_edge. Returns a copy when the
/// image already fits.
Image fit_within(const Image& img, int max_edge);

}  // namespace styler
