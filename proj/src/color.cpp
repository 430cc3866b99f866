#include "styler/color.hpp"

#include <Eigen/LU>

namespace styler {

Eigen::Matrix3d rgb_to_yuv_matrix() {
  Eigen::Matrix3d m;
  m << kLumaR, kLumaG, kLumaB,
      -kChromaU * kLumaR, -kChromaU * kLumaG, kChromaU * (1.0 - kLumaB),
      kChromaV * (1.0 - kLumaR), -kChromaV * kLumaG, -kChromaV * kLumaB;
  return m;
}

Eigen::Matrix3d yuv_to_rgb_matrix() { return rgb_to_yuv_matrix().inverse(); }

Plane luma(const Image& img) {
  if (img.channels() == 1) return img.plane(0);
  return kLumaR * img.plane(0) + kLumaG * img.plane(1) + kLumaB * img.plane(2);
}

std::array<Plane, 2> chroma_planes(const Image& rgb) {
  if (rgb.channels() != 3) throw InvalidInput("chroma requires a 3-channel image");
  const Eigen::Matrix3d m = rgb_to_yuv_matrix();
  const auto& r = rgb.plane(0);
  const auto& g = rgb.plane(1);
  const auto& b = rgb.plane(2);
  return {Plane(m(1, 0) * r + m(1, 1) * g + m(1, 2) * b),
          Plane(m(2, 0) * r + m(2, 1) * g + m(2, 2) * b)};
}

namespace {

Image yuv_to_rgb(const Plane& y, const Plane& u, const Plane& v) {
  const Eigen::Matrix3d m = yuv_to_rgb_matrix();
  std::vector<Plane> rgb;
  rgb.reserve(3);
  for (int c = 0; c < 3; ++c)
    rgb.emplace_back((m(c, 0) * y + m(c, 1) * u + m(c, 2) * v).max(0.0).min(1.0));
  return Image(std::move(rgb));
}

}  // namespace

Image rgb_to_luma_chroma(const Image& img) {
  if (img.channels() != 3) throw InvalidInput("To Grayscale expects a 3-channel image");
  Image out(clip01(luma(img)));
  out.set_chroma(chroma_planes(img));
  return out;
}

Image luma_chroma_to_rgb(const Image& img) {
  if (img.channels() != 1) throw InvalidInput("To Color expects a 1-channel image");
  if (!img.has_chroma()) throw StateError("To Color requires chroma stashed by To Grayscale");
  const auto& uv = img.chroma();
  return yuv_to_rgb(img.plane(0), uv[0], uv[1]);
}

Image with_luma(const Image& src, Plane new_luma) {
  if (src.channels() == 1) {
    Image out(std::move(new_luma));
    if (src.has_chroma()) out.set_chroma(src.chroma());
    return out;
  }
  const auto uv = chroma_planes(src);
  return yuv_to_rgb(new_luma, uv[0], uv[1]);
}

Image gray_to_rgb(const Image& gray) {
  if (gray.channels() == 3) return gray;
  return Image(std::vector<Plane>{gray.plane(0), gray.plane(0), gray.plane(0)});
}

}  // namespace styler
