#include <gtest/gtest.h>

#include <cmath>

#include "styler/color.hpp"
#include "styler/error.hpp"
#include "styler/pixel_ops.hpp"
#include "styler/spatial_ops.hpp"
#include "test_util.hpp"

using namespace styler;
using styler::testing::random_plane;

namespace {

// Plain 2-D correlation with replicate padding; kernel indexed [dy][dx].
Plane brute_force_correlate(const Plane& src, const Eigen::MatrixXd& k) {
  const int ry = static_cast<int>(k.rows()) / 2, rx = static_cast<int>(k.cols()) / 2;
  Plane out(src.rows(), src.cols());
  for (int y = 0; y < src.rows(); ++y)
    for (int x = 0; x < src.cols(); ++x) {
      double s = 0.0;
      for (int dy = -ry; dy <= ry; ++dy)
        for (int dx = -rx; dx <= rx; ++dx) s += k(dy + ry, dx + rx) * sample_clamped(src, x + dx, y + dy);
      out(y, x) = s;
    }
  return out;
}

Plane rot90(const Plane& p) { return p.transpose().colwise().reverse().eval(); }

}  // namespace

TEST(GaussianKernel, NormalizedAndSized) {
  for (double s : {0.5, 1.0, 2.3}) {
    const auto k = gaussian_kernel(s);
    EXPECT_EQ(k.size(), 2 * static_cast<int>(std::ceil(3 * s)) + 1);
    EXPECT_NEAR(k.sum(), 1.0, 1e-14);
  }
  EXPECT_EQ(gaussian_kernel(0.0).size(), 1);
}

TEST(GaussianBlur, ZeroSigmaAndConstant) {
  const Plane p = random_plane(9, 7, 1);
  EXPECT_TRUE((gaussian_blur(p, 0.0) == p).all());
  const Plane c = Plane::Constant(12, 10, 0.37);
  EXPECT_LT((gaussian_blur(c, 2.5) - 0.37).abs().maxCoeff(), 1e-14);
  EXPECT_THROW(gaussian_blur(p, -1.0), InvalidInput);
}

TEST(GaussianBlur, ImpulseReproducesSampledGaussian) {
  Plane impulse = Plane::Zero(21, 21);
  impulse(10, 10) = 1.0;
  const Plane out = gaussian_blur(impulse, 1.0);
  double norm = 0.0;
  for (int d = -3; d <= 3; ++d) norm += std::exp(-0.5 * d * d);
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx)
      EXPECT_NEAR(out(10 + dy, 10 + dx), std::exp(-0.5 * (dx * dx + dy * dy)) / (norm * norm), 1e-14);
  EXPECT_NEAR(out.sum(), 1.0, 1e-5);
}

TEST(GaussianBlur, MatchesDenseConvolution) {
  const Plane p = random_plane(16, 13, 2);
  const auto k = gaussian_kernel(1.3);
  const Plane out = gaussian_blur(p, 1.3);
  EXPECT_LT((out - brute_force_correlate(p, k * k.transpose())).abs().maxCoeff(), 1e-13);
}

TEST(GaussianBlur, PreservesMean) {
  const Plane p = styler::testing::smooth_scene(200, 200, 3);
  EXPECT_NEAR(gaussian_blur(p, 2.0).mean(), p.mean(), 1e-4);
}

TEST(Sobel, ConstantIsZero) {
  const Image out = sobel(Image(Plane(Plane::Constant(6, 6, 0.8))));
  EXPECT_EQ(out.plane(0).abs().maxCoeff(), 0.0);
}

TEST(Sobel, RampGivesEightTimesSlope) {
  const double s = 0.01;
  Plane ramp(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) ramp(y, x) = s * x;
  const Plane out = sobel(Image(ramp)).plane(0);
  for (int y = 1; y < 9; ++y)
    for (int x = 1; x < 9; ++x) EXPECT_NEAR(out(y, x), 8 * s, 1e-13);
}

TEST(Sobel, MatchesBruteForceOnPatch) {
  const Plane p = random_plane(5, 5, 4, 0.0, 0.2);
  Eigen::MatrixXd kx(3, 3), ky(3, 3);
  kx << -1, 0, 1, -2, 0, 2, -1, 0, 1;
  ky = kx.transpose();
  const Plane gx = brute_force_correlate(p, kx), gy = brute_force_correlate(p, ky);
  const Plane expect = (gx.square() + gy.square()).sqrt().min(1.0);
  EXPECT_LT((sobel(Image(p)).plane(0) - expect).abs().maxCoeff(), 1e-13);
}

TEST(Sobel, ColorUsesLumaAndRotationCommutes) {
  const Image rgb = styler::testing::random_image(11, 8, 3, 5);
  const Image out = sobel(rgb);
  EXPECT_EQ(out.channels(), 1);
  EXPECT_TRUE(out == sobel(Image(luma(rgb))));
  const Plane p = random_plane(12, 9, 6, 0.0, 0.1);
  EXPECT_LT((sobel(Image(Plane(rot90(p)))).plane(0) - rot90(sobel(Image(p)).plane(0))).abs().maxCoeff(), 1e-14);
}

TEST(PatternFill, WhiteAndBlack) {
  const auto tex = default_hatch_textures();
  ASSERT_EQ(tex.size(), 5u);
  EXPECT_EQ(tex.back().minCoeff(), 1.0);
  const Image white = pattern_fill(Image(Plane(Plane::Ones(20, 20))), tex);
  EXPECT_EQ(white.plane(0).minCoeff(), 1.0);
  const Image black = pattern_fill(Image(Plane(Plane::Zero(20, 20))), tex);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_EQ(black(x, y), tex[0](y % 8, x % 8));
  EXPECT_LT(tex[0].mean(), tex[1].mean());
  EXPECT_THROW(pattern_fill(white, {}), InvalidInput);
}

TEST(PatternFill, BoundaryFollowsPosterizeLevels) {
  Plane two(16, 32);
  two.leftCols(16).setConstant(0.2);
  two.rightCols(16).setConstant(0.8);
  const auto tex = default_hatch_textures();
  const Image out = pattern_fill(Image(two), tex);
  const Plane levels = posterize(Image(two), 5).plane(0) * 4.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x) {
      const int level = static_cast<int>(std::lround(levels(y, x)));
      EXPECT_EQ(out(x, y), tex[level](y % 8, x % 8));
    }
}

TEST(Halftone, WhiteAndBlack) {
  const Image white = halftone(Image(Plane(Plane::Ones(24, 24))), 6, HalftoneMode::gray);
  EXPECT_EQ(white.plane(0).minCoeff(), 1.0);
  const Image black = halftone(Image(Plane(Plane::Zero(24, 24))), 6, HalftoneMode::gray);
  EXPECT_EQ(black.plane(0).maxCoeff(), 0.0);
  const Image cmyk_black = halftone(Image(24, 24, 3, 0.0), 6, HalftoneMode::cmyk);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(cmyk_black.plane(c).maxCoeff(), 0.0);
  EXPECT_THROW(halftone(white, 1, HalftoneMode::gray), InvalidInput);
  EXPECT_THROW(parse_halftone_mode("sepia"), InvalidInput);
}

TEST(Halftone, HalfGrayCoversHalfOfEachCell) {
  const Image out = halftone(Image(Plane(Plane::Constant(32, 32, 0.5))), 8, HalftoneMode::gray);
  for (int cy = 0; cy < 4; ++cy)
    for (int cx = 0; cx < 4; ++cx) {
      const double inked = (1.0 - out.plane(0).block(cy * 8, cx * 8, 8, 8)).sum();
      EXPECT_NEAR(inked, 32.0, 1.0) << cx << "," << cy;
    }
}

TEST(Halftone, CoverageTracksDarkness) {
  Plane ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp(y, x) = (x / 8) / 7.0;
  const Plane out = halftone(Image(ramp), 8, HalftoneMode::gray).plane(0);
  for (int cx = 0; cx < 8; ++cx) {
    const double ink = (1.0 - out.block(0, cx * 8, 8, 8)).sum();
    EXPECT_NEAR(ink, 64.0 * (1.0 - cx / 7.0), 1.0) << cx;
  }
}

TEST(Halftone, DotsGrowFromCellCenter) {
  const Plane out = halftone(Image(Plane(Plane::Constant(16, 16, 0.7))), 8, HalftoneMode::gray).plane(0);
  for (int cy = 0; cy < 2; ++cy)
    for (int cx = 0; cx < 2; ++cx) {
      double inked_max = 0.0, blank_min = 1e9;
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const double r = std::hypot(x + 0.5 - 4.0, y + 0.5 - 4.0);
          if (out(cy * 8 + y, cx * 8 + x) == 0.0) inked_max = std::max(inked_max, r);
          else blank_min = std::min(blank_min, r);
        }
      EXPECT_LE(inked_max, blank_min + 1e-12);
    }
}
