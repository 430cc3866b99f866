#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "styler/image.hpp"

namespace styler {

/// Reads an 8-bit (or 16-bit, downconverted) PNG as a gray or RGB image in
/// [0,1]. Palette images are expanded, alpha is dropped.
Image read_png(const std::filesystem::path& path);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Writes 8-bit gray or RGB. Samples are clipped and rounded to v*255.
void write_png(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& img);

/// Quantizes to the 8-bit grid used by the PNG writer.
Image quantize8(const Image& img);

}  // namespace styler
