#include "styler/collage.hpp"

#include <cmath>

namespace styler {

std::pair<int, int> collage_tile_origin(const BladeModel& model, int bucket, const CollageLayout& layout) {
  const int o_bins = model.quantizer.orientation_bins;
  const int tile = model.side * layout.cell;
  const int column = bucket % o_bins;
  const int row = bucket / o_bins;  // s + S c
  return {column * (tile + layout.gap), row * (tile + layout.gap)};
}

Image render_collage(const BladeModel& model, const CollageLayout& layout) {
  model.validate();
  if (layout.cell < 1 || layout.gap < 0) throw InvalidInput("collage layout needs cell >= 1 and gap >= 0");
  const int columns = model.quantizer.orientation_bins;
  const int rows = model.quantizer.strength_bins * model.quantizer.coherence_bins;
  const int tile = model.side * layout.cell;
  const int width = columns * tile + (columns - 1) * layout.gap;
  const int height = rows * tile + (rows - 1) * layout.gap;
  Image out(width, height, 3, 0.5);
  const double scale = model.filters.cwiseAbs().maxCoeff();
  for (int k = 0; k < model.bucket_count(); ++k) {
    const auto [x0, y0] = collage_tile_origin(model, k, layout);
    for (int ty = 0; ty < model.side; ++ty)
      for (int tx = 0; tx < model.side; ++tx) {
        const double v = scale > 0.0 ? std::clamp(model.filters(k, ty * model.side + tx) / scale, -1.0, 1.0) : 0.0;
        const double r = v >= 0.0 ? 1.0 : 1.0 + v;
        const double g = 1.0 - std::abs(v);
        const double b = v <= 0.0 ? 1.0 : 1.0 - v;
        for (int py = 0; py < layout.cell; ++py)
          for (int px = 0; px < layout.cell; ++px) {
            const int x = x0 + tx * layout.cell + px, y = y0 + ty * layout.cell + py;
            out(x, y, 0) = r;
            out(x, y, 1) = g;
            out(x, y, 2) = b;
          }
      }
  }
  return out;
}

}  // namespace styler
