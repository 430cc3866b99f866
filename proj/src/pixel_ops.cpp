#include "styler/pixel_ops.hpp"

#include <cmath>
#include <numbers>

#include "styler/color.hpp"

namespace styler {

namespace {

// Narrowest percentile span that is treated as a real distribution.
constexpr double kMinSpan = 1.0 / 255.0;

Plane posterize_plane(const Plane& p, int levels) {
  const double q = levels - 1;
  Plane out(p.rows(), p.cols());
  const double* src = p.data();
  double* dst = out.data();
  const Eigen::Index n = p.size();
  for (Eigen::Index i = 0; i < n; ++i) dst[i] = std::nearbyint(src[i] * q) / q;
  return out;
}

void check_levels(int levels) {
  if (levels < 2 || levels > 256) throw InvalidInput("posterize levels must be in [2, 256]");
}

void require_rgb(const Image& img, const char* what) {
  if (img.channels() != 3) throw InvalidInput(std::string(what) + " expects a 3-channel image");
}

}  // namespace

Image posterize(const Image& img, int levels) {
  check_levels(levels);
  Image out = img;
  for (auto& p : out.planes()) p = posterize_plane(p, levels);
  return out;
}

Image luma_posterize(const Image& img, int levels) {
  check_levels(levels);
  if (img.channels() == 1) return posterize(img, levels);
  return with_luma(img, posterize_plane(clip01(luma(img)), levels));
}

Image brightness(const Image& img, double factor) {
  if (!(factor >= 0.0)) throw InvalidInput("brightness factor must be >= 0");
  if (factor == 1.0) return img;
  return with_luma(img, (factor * luma(img)).min(1.0));
}

Image soft_threshold(const Image& img, double phi, double epsilon) {
  if (!(phi > 0.0)) throw InvalidInput("soft threshold slope must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 255.0)) throw InvalidInput("soft threshold cutoff must be in [0, 255]");
  Image out = img;
  for (auto& p : out.planes()) p = soft_threshold_expr(p, phi, epsilon);
  return out;
}

Image saturate(const Image& img, double s) {
  require_rgb(img, "Saturation");
  if (!(s >= 0.0)) throw InvalidInput("saturation must be >= 0");
  const Plane gray = luma(img);
  std::vector<Plane> out;
  for (int c = 0; c < 3; ++c) out.emplace_back((gray + s * (img.plane(c) - gray)).max(0.0).min(1.0));
  return Image(std::move(out));
}

Image hue(const Image& img, double angle, const std::array<double, 3>& bias) {
  require_rgb(img, "Hue");
  const auto uv = chroma_planes(img);
  const double cs = std::cos(angle), sn = std::sin(angle);
  const Plane u = cs * uv[0] - sn * uv[1];
  const Plane v = sn * uv[0] + cs * uv[1];
  const Plane y = luma(img);
  const Eigen::Matrix3d m = yuv_to_rgb_matrix();
  std::vector<Plane> out;
  for (int c = 0; c < 3; ++c)
    out.emplace_back((m(c, 0) * y + m(c, 1) * u + m(c, 2) * v + bias[c]).max(0.0).min(1.0));
  return Image(std::move(out));
}

std::array<double, 3> hsl_to_rgb(double h_degrees, double s, double l) {
  const double h = std::fmod(std::fmod(h_degrees, 360.0) + 360.0, 360.0) / 360.0;
  if (s <= 0.0) return {l, l, l};
  const double q = l < 0.5 ? l * (1.0 + s) : l + s - l * s;
  const double p = 2.0 * l - q;
  auto channel = [&](double t) {
    if (t < 0.0) t += 1.0;
    if (t > 1.0) t -= 1.0;
    if (t < 1.0 / 6.0) return p + (q - p) * 6.0 * t;
    if (t < 0.5) return q;
    if (t < 2.0 / 3.0) return p + (q - p) * (2.0 / 3.0 - t) * 6.0;
    return p;
  };
  return {channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0)};
}

Image colorize(const Image& img, double hue_degrees, double saturation, double lum_scale) {
  if (!(saturation >= 0.0 && saturation <= 1.0)) throw InvalidInput("colorize saturation must be in [0, 1]");
  if (!(lum_scale >= 0.0)) throw InvalidInput("colorize lightness scale must be >= 0");
  const Plane l = (luma(img) * lum_scale).max(0.0).min(1.0);
  std::vector<Plane> out(3, Plane(l.rows(), l.cols()));
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const auto rgb = hsl_to_rgb(hue_degrees, saturation, l.data()[i]);
    for (int c = 0; c < 3; ++c) out[c].data()[i] = rgb[c];
  }
  return Image(std::move(out));
}

double histogram_percentile(const Plane& values, double percent) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values.data()[i], 0.0, 1.0);
    hist[std::min(kBins - 1, static_cast<int>(v * kBins))] += 1.0;
  }
  const double target = std::clamp(percent, 0.0, 100.0) / 100.0 * static_cast<double>(values.size());
  double cum = 0.0;
  for (int b = 0; b < kBins; ++b) {
    if (hist[b] > 0.0 && cum + hist[b] >= target) {
      const double frac = (target - cum) / hist[b];
      return (b + std::clamp(frac, 0.0, 1.0)) / kBins;
    }
    cum += hist[b];
  }
  return 1.0;
}

Image linear_equalize(const Image& img, double low_percent, double high_percent) {
  if (!(low_percent >= 0.0 && high_percent <= 100.0 && low_percent < high_percent))
    throw InvalidInput("linear equalization needs 0 <= low < high <= 100");
  const Plane y = luma(img);
  const double lo = histogram_percentile(y, low_percent);
  const double hi = histogram_percentile(y, high_percent);
  if (hi - lo < kMinSpan) return img;
  return with_luma(img, ((y - lo) / (hi - lo)).max(0.0).min(1.0));
}

Image min_dynamic_range(const Image& img, double range) {
  if (!(range > 0.0 && range <= 255.0)) throw InvalidInput("dynamic range must be in (0, 255]");
  const Plane y = luma(img);
  const double lo = histogram_percentile(y, 5.0);
  const double hi = histogram_percentile(y, 95.0);
  const double span = hi - lo;
  const double wanted = range / 255.0;
  if (span < kMinSpan || span >= wanted) return img;
  const double mid = 0.5 * (lo + hi);
  const double gain = wanted / span;
  return with_luma(img, (mid + gain * (y - mid)).max(0.0).min(1.0));
}

}  // namespace styler
