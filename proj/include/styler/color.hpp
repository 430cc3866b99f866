#pragma once

#include <Eigen/Core>

#include "styler/image.hpp"

namespace styler {

/// BT.601 full-range luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;
/// Chroma scale factors: U = kChromaU (B - Y), V = kChromaV (R - Y).
inline constexpr double kChromaU = 0.5 / (1.0 - kLumaB);
inline constexpr double kChromaV = 0.5 / (1.0 - kLumaR);

/// RGB -> YUV matrix (rows Y, U, V).
Eigen::Matrix3d rgb_to_yuv_matrix();
/// Exact inverse of rgb_to_yuv_matrix().
Eigen::Matrix3d yuv_to_rgb_matrix();

/// To Grayscale: returns the luma plane (clipped to [0,1]) with the U,V
/// planes stashed on the result. Throws InvalidInput unless img has 3 channels.
Image rgb_to_luma_chroma(const Image& img);

/// To Color: reassembles RGB from the luma and the stashed chroma, clipping
/// to [0,1]. Throws StateError when nothing is stashed.
Image luma_chroma_to_rgb(const Image& img);

/// Luma of any image: channel 0 for gray input, BT.601 weighted sum for RGB.
Plane luma(const Image& img);

/// Replace the luma of `src` by `new_luma`, keeping its chroma. RGB inputs
/// come back as clipped RGB; gray inputs keep their stash (if any).
Image with_luma(const Image& src, Plane new_luma);

/// U,V planes of an RGB image.
std::array<Plane, 2> chroma_planes(const Image& rgb);

/// Replicates a gray image into three identical channels.
Image gray_to_rgb(const Image& gray);

}  // namespace styler
