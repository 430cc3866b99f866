#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "styler/blade.hpp"

namespace styler {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Little-endian binary layout:
///   "BLD1" | version u32 | side u32 | O, S, C u32 | rho f64 | passes u32 |
///   strength thresholds f64 x (S-1) | coherence thresholds f64 x (C-1) |
///   K*N coefficients f64 (bucket-major, taps row-major) | CRC-32 u32
/// The CRC covers every preceding byte.
std::vector<std::uint8_t> serialize_model(const BladeModel& model);

/// Throws FormatError on bad magic/version, truncation, trailing bytes or a
/// CRC mismatch. Nothing is returned unless the whole payload is valid.
BladeModel parse_model(std::span<const std::uint8_t> bytes);

/// Size in bytes of a serialized model with the given shape.
std::size_t serialized_model_size(int side, int orientation_bins, int strength_bins, int coherence_bins);

/// Writes the binary model and, when the model carries metadata, a JSON
/// sidecar at `<path>.json`.
void save_model(const BladeModel& model, const std::filesystem::path& path);

/// Reads a model and its optional sidecar. info.name defaults to the file stem.
BladeModel load_model(const std::filesystem::path& path);

}  // namespace styler
