#include "styler/resample.hpp"

#include <cmath>

namespace styler {

int scaled_extent(int n, double scale) {
  return std::max(1, static_cast<int>(std::lround(n * scale)));
}

Plane resize(const Plane& src, int width, int height) {
  if (width < 1 || height < 1) throw InvalidInput("resize target must be at least 1x1");
  if (width == src.cols() && height == src.rows()) return src;
  const double sx = static_cast<double>(src.cols()) / width;
  const double sy = static_cast<double>(src.rows()) / height;
  const int w = static_cast<int>(src.cols());
  const int h = static_cast<int>(src.rows());

  // Precompute the horizontal taps once per column.
  std::vector<int> x0(width), x1(width);
  std::vector<double> tx(width);
  for (int x = 0; x < width; ++x) {
    const double fx = (x + 0.5) * sx - 0.5;
    const double fl = std::floor(fx);
    tx[x] = fx - fl;
    x0[x] = clamp_index(static_cast<int>(fl), w);
    x1[x] = clamp_index(static_cast<int>(fl) + 1, w);
  }
  Plane out(height, width);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const double fl = std::floor(fy);
    const double ty = fy - fl;
    const int ya = clamp_index(static_cast<int>(fl), h);
    const int yb = clamp_index(static_cast<int>(fl) + 1, h);
    for (int x = 0; x < width; ++x) {
      const double top = (1.0 - tx[x]) * src(ya, x0[x]) + tx[x] * src(ya, x1[x]);
      const double bot = (1.0 - tx[x]) * src(yb, x0[x]) + tx[x] * src(yb, x1[x]);
      out(y, x) = (1.0 - ty) * top + ty * bot;
    }
  }
  return out;
}

Image resize(const Image& img, int width, int height) {
  std::vector<Plane> planes;
  planes.reserve(img.channels());
  for (const auto& p : img.planes()) planes.push_back(resize(p, width, height));
  Image out(std::move(planes));
  if (img.has_chroma()) {
    const auto& uv = img.chroma();
    out.set_chroma({resize(uv[0], width, height), resize(uv[1], width, height)});
  }
  return out;
}

Image resample(const Image& img, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidInput("scale must be positive");
  return resize(img, scaled_extent(img.width(), scale), scaled_extent(img.height(), scale));
}

Image fit_within(const Image& img, int max_edge) {
  if (max_edge < 1) throw InvalidInput("max_edge must be positive");
  const int longest = std::max(img.width(), img.height());
  if (longest <= max_edge) return img;
  return resample(img, static_cast<double>(max_edge) / longest);
}

}  // namespace styler
