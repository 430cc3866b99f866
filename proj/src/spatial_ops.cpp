#include "styler/spatial_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <omp.h>

#include "styler/color.hpp"
#include "styler/png_io.hpp"

namespace styler {

Eigen::VectorXd gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be >= 0");
  if (sigma == 0.0) return Eigen::VectorXd::Ones(1);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  return k / k.sum();
}

Plane convolve_separable(const Plane& src, const Eigen::VectorXd& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  if (radius == 0) return src * kernel[0];
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int taps = static_cast<int>(kernel.size());

  // Each thread owns a band of output rows and keeps only the last `taps`
  // horizontally filtered rows in a ring, so nothing image-sized is
  // materialized between the passes. Taps are summed in index order.
  Plane out(h, w);
#pragma omp parallel
  {
    const int n = omp_get_num_threads(), id = omp_get_thread_num();
    const int y0 = static_cast<int>(static_cast<long>(h) * id / n);
    const int y1 = static_cast<int>(static_cast<long>(h) * (id + 1) / n);
    Eigen::ArrayXd padded(w + 2 * radius);
    Plane ring(taps, w);  // slot p % taps holds filtered row clamp(p)
    const auto fill = [&](int p) {
      const int y = clamp_index(p, h);
      padded.segment(radius, w) = src.row(y).transpose();
      padded.head(radius).setConstant(src(y, 0));
      padded.tail(radius).setConstant(src(y, w - 1));
      auto dst = ring.row(((p % taps) + taps) % taps).transpose();
      dst = kernel[0] * padded.head(w);
      for (int k = 1; k < taps; ++k) dst += kernel[k] * padded.segment(k, w);
    };
    const auto slot = [&](int p) { return ring.row(((p % taps) + taps) % taps); };
    if (y0 < y1)
      for (int p = y0 - radius; p < y0 + radius; ++p) fill(p);
    for (int y = y0; y < y1; ++y) {
      fill(y + radius);
      auto dst = out.row(y);
      dst = kernel[0] * slot(y - radius);
      for (int k = 1; k < taps; ++k) dst += kernel[k] * slot(y + k - radius);
    }
  }
  return out;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  if (sigma == 0.0) return src;
  return convolve_separable(src, gaussian_kernel(sigma));
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be >= 0");
  Image out = img;
  if (sigma == 0.0) return out;
  const Eigen::VectorXd k = gaussian_kernel(sigma);
  for (auto& p : out.planes()) p = convolve_separable(p, k);
  return out;
}

Image sobel(const Image& img) {
  const Plane y = luma(img);
  const Eigen::Index h = y.rows(), w = y.cols();
  Plane p(h + 2, w + 2);
  p.block(1, 1, h, w) = y;
  p.block(0, 1, 1, w) = y.row(0);
  p.block(h + 1, 1, 1, w) = y.row(h - 1);
  p.col(0) = p.col(1);
  p.col(w + 1) = p.col(w);
  const Plane gx = (p.block(0, 2, h, w) + 2.0 * p.block(1, 2, h, w) + p.block(2, 2, h, w)) -
                   (p.block(0, 0, h, w) + 2.0 * p.block(1, 0, h, w) + p.block(2, 0, h, w));
  const Plane gy = (p.block(2, 0, h, w) + 2.0 * p.block(2, 1, h, w) + p.block(2, 2, h, w)) -
                   (p.block(0, 0, h, w) + 2.0 * p.block(0, 1, h, w) + p.block(0, 2, h, w));
  Image out(Plane((gx.square() + gy.square()).sqrt().min(1.0)));
  if (img.channels() == 1 && img.has_chroma()) out.set_chroma(img.chroma());
  return out;
}

TextureSet default_hatch_textures(int tile, int count) {
  if (tile < 2 || count < 2) throw InvalidInput("hatch textures need tile >= 2 and count >= 2");
  TextureSet set;
  for (int level = 0; level < count; ++level) {
    // Level 0 carries count-1 strokes, the top level none.
    const int strokes = count - 1 - level;
    Plane t = Plane::Ones(tile, tile);
    for (int s = 0; s < strokes; ++s) {
      const int offset = s * tile / strokes;
      for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x)
          if ((x + y) % tile == offset) t(y, x) = 0.0;
    }
    set.push_back(std::move(t));
  }
  return set;
}

TextureSet load_textures(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw ConfigError("texture directory not found: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  TextureSet set;
  for (const auto& f : files) {
    set.push_back(luma(read_png(f)));
    if (set.back().rows() != set.front().rows() || set.back().cols() != set.front().cols())
      throw InvalidInput("texture tiles must share one size: " + f.string());
  }
  if (set.empty()) throw InvalidInput("texture directory holds no PNG tiles: " + dir.string());
  return set;
}

Image pattern_fill(const Image& img, const TextureSet& textures) {
  if (textures.empty()) throw InvalidInput("pattern fill needs at least one texture");
  const auto th = textures.front().rows(), tw = textures.front().cols();
  for (const auto& t : textures)
    if (t.rows() != th || t.cols() != tw) throw InvalidInput("texture tiles must share one size");
  const Plane y = clip01(luma(img));
  const int levels = static_cast<int>(textures.size());
  Plane out(y.rows(), y.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const int level = levels == 1 ? 0 : static_cast<int>(std::nearbyint(y(r, c) * (levels - 1)));
      out(r, c) = textures[level](r % th, c % tw);
    }
  }
  Image result(std::move(out));
  if (img.channels() == 1 && img.has_chroma()) result.set_chroma(img.chroma());
  return result;
}

HalftoneMode parse_halftone_mode(std::string_view name) {
  if (name == "gray") return HalftoneMode::gray;
  if (name == "cmyk") return HalftoneMode::cmyk;
  throw InvalidInput("unknown halftone mode: " + std::string(name));
}

namespace {

// Screens one ink plane (values = coverage in [0,1]) at `angle` radians.
// Returns 1 where the pixel is inked. Each cell inks round(coverage * n) of
// its n pixels, nearest to the cell center first, which is the rasterized
// disc of radius cell * sqrt(coverage / pi) with an exact ink count.
Plane screen(const Plane& ink, int cell, double angle) {
  const int h = static_cast<int>(ink.rows()), w = static_cast<int>(ink.cols());
  const double cs = std::cos(angle), sn = std::sin(angle);
  double umin = 1e300, vmin = 1e300, umax = -1e300, vmax = -1e300;
  for (int cy : {0, h}) {
    for (int cx : {0, w}) {
      const double u = cs * cx + sn * cy, v = -sn * cx + cs * cy;
      umin = std::min(umin, u), umax = std::max(umax, u);
      vmin = std::min(vmin, v), vmax = std::max(vmax, v);
    }
  }
  const long i0 = static_cast<long>(std::floor(umin / cell)) - 1;
  const long j0 = static_cast<long>(std::floor(vmin / cell)) - 1;
  const long ni = static_cast<long>(std::floor(umax / cell)) - i0 + 2;
  const long nj = static_cast<long>(std::floor(vmax / cell)) - j0 + 2;

  struct Member {
    double r2;
    double theta;
    int index;
  };
  std::vector<std::vector<Member>> cells(static_cast<std::size_t>(ni * nj));
  std::vector<double> sum(cells.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double u = (cs * px + sn * py) / cell, v = (-sn * px + cs * py) / cell;
      const double fu = std::floor(u), fv = std::floor(v);
      const auto id = static_cast<std::size_t>((static_cast<long>(fv) - j0) * ni + (static_cast<long>(fu) - i0));
      const double du = u - fu - 0.5, dv = v - fv - 0.5;
      cells[id].push_back({du * du + dv * dv, std::atan2(dv, du), y * w + x});
      sum[id] += ink(y, x);
    }
  }
  Plane out = Plane::Zero(h, w);
  for (std::size_t id = 0; id < cells.size(); ++id) {
    auto& members = cells[id];
    if (members.empty()) continue;
    const auto n = static_cast<long>(std::lround(sum[id]));
    if (n <= 0) continue;
    std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
      // Ties at equal radius resolve by angle so the result is deterministic.
      if (std::abs(a.r2 - b.r2) > 1e-12) return a.r2 < b.r2;
      return a.theta < b.theta;
    });
    for (long k = 0; k < n && k < static_cast<long>(members.size()); ++k) out.data()[members[k].index] = 1.0;
  }
  return out;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

Image halftone(const Image& img, int cell, HalftoneMode mode) {
  if (cell < 2) throw InvalidInput("halftone cell must be >= 2");
  if (mode == HalftoneMode::gray) {
    const Plane ink = 1.0 - clip01(luma(img));
    return Image(Plane(1.0 - screen(ink, cell, 0.0)));
  }
  const Image rgb = gray_to_rgb(clip01(img));
  const Plane k = 1.0 - rgb.plane(0).max(rgb.plane(1)).max(rgb.plane(2));
  const Plane denom = (1.0 - k).max(1e-12);
  std::array<Plane, 3> cmy;
  for (int c = 0; c < 3; ++c) cmy[c] = ((1.0 - rgb.plane(c) - k) / denom).max(0.0).min(1.0);
  const Plane ck = screen(cmy[0], cell, deg(15.0));
  const Plane mk = screen(cmy[1], cell, deg(75.0));
  const Plane yk = screen(cmy[2], cell, deg(0.0));
  const Plane kk = screen(k, cell, deg(45.0));
  const Plane keep = 1.0 - kk;
  return Image(std::vector<Plane>{(1.0 - ck) * keep, (1.0 - mk) * keep, (1.0 - yk) * keep});
}

}  // namespace styler
