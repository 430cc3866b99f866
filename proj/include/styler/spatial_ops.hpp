#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "styler/image.hpp"

namespace styler {

/// Normalized sampled Gaussian with radius ceil(3 sigma). sigma == 0 yields
/// the unit impulse.
Eigen::VectorXd gaussian_kernel(double sigma);

/// Separable convolution with a symmetric odd-length kernel, replicate padding.
Plane convolve_separable(const Plane& src, const Eigen::VectorXd& kernel);

Plane gaussian_blur(const Plane& src, double sigma);
Image gaussian_blur(const Image& img, double sigma);

/// Sobel magnitude of the luma, clipped to [0,1]. Single-channel output.
Image sobel(const Image& img);

/// Ordered texture tiles, darkest level first. All tiles share one size.
using TextureSet = std::vector<Plane>;

/// `count` hatch tiles of size tile x tile: 45-degree strokes, densest first,
/// the last tile blank white.
TextureSet default_hatch_textures(int tile = 8, int count = 5);

/// Loads every *.png in `dir` (sorted by file name) as a luma tile.
TextureSet load_textures(const std::filesystem::path& dir);

/// Posterizes luma into |textures| levels and replaces each pixel with the
/// tiled texture for its level.
Image pattern_fill(const Image& img, const TextureSet& textures);

enum class HalftoneMode { gray, cmyk };

HalftoneMode parse_halftone_mode(std::string_view name);


/// Clustered-dot screen: each cell x cell cell gets a centered dot covering
/// round(mean ink coverage x pixel count) pixels. cmyk mode uses one screen
/// per ink at 15/75/0/45 degrees (C/M/Y/K).
Image halftone(const Image& img, int cell, HalftoneMode mode);

}  // namespace styler
