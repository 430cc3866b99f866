#pragma once

#include "styler/blade.hpp"

namespace styler {

struct CollageLayout {
  int cell = 8;  ///< pixels per filter tap
  int gap = 2;   ///< gutter between tiles
};

/// Tabular view of a filter bank: columns are orientation bins, rows run over
/// strength (fast) and coherence (slow). Each tile is a side x side heatmap
/// with a diverging colormap centered at zero (red positive, blue negative,
/// white zero), normalized by the largest |coefficient| of the bank.
Image render_collage(const BladeModel& model, const CollageLayout& layout = {});

/// Pixel origin of bucket k's tile.
std::pair<int, int> collage_tile_origin(const BladeModel& model, int bucket, const CollageLayout& layout = {});

}  // namespace styler
