#pragma once

#include "styler/image.hpp"

namespace styler {

double mean_squared_error(const Plane& a, const Plane& b);

/// 10 log10(peak^2 / MSE); +inf for identical inputs.
double psnr(const Plane& a, const Plane& b, double peak = 1.0);

/// Mean SSIM with an 11-tap Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range `peak`.
double mssim(const Plane& a, const Plane& b, double peak = 1.0);

/// Sum over pixels of the forward-difference gradient magnitude.
double total_variation(const Plane& u);

}  // namespace styler
