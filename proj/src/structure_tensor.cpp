#include "styler/structure_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "styler/spatial_ops.hpp"

namespace styler {

void QuantizerSpec::validate() const {
  if (orientation_bins < 1 || strength_bins < 1 || coherence_bins < 1)
    throw InvalidInput("quantizer bin counts must be >= 1");
  if (static_cast<int>(strength_thresholds.size()) != strength_bins - 1)
    throw InvalidInput("quantizer needs strength_bins - 1 strength thresholds");
  if (static_cast<int>(coherence_thresholds.size()) != coherence_bins - 1)
    throw InvalidInput("quantizer needs coherence_bins - 1 coherence thresholds");
  for (const auto* t : {&strength_thresholds, &coherence_thresholds}) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      if (!std::isfinite((*t)[i])) throw InvalidInput("quantizer thresholds must be finite");
      if (i > 0 && !((*t)[i] > (*t)[i - 1])) throw InvalidInput("quantizer thresholds must be strictly ascending");
    }
  }
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInput("quantizer rho must be >= 0");
}

std::vector<double> QuantizerSpec::uniform_coherence_thresholds(int bins) {
  std::vector<double> t;
  for (int k = 1; k < bins; ++k) t.push_back(static_cast<double>(k) / bins);
  return t;
}

RotatedGradients rotated_gradients(const Image& img) {
  if (img.channels() != 1) throw InvalidInput("rotated gradients expect a 1-channel image");
  const Eigen::Index h = img.height(), w = img.width();
  if (h < 2 || w < 2) throw InvalidInput("rotated gradients need an image of at least 2x2");
  const Plane& u = img.plane(0);
  const double s = 1.0 / std::numbers::sqrt2;
  RotatedGradients g{Plane(h, w), Plane(h, w)};
  g.d1.topLeftCorner(h - 1, w - 1) = s * (u.block(0, 1, h - 1, w - 1) - u.block(1, 0, h - 1, w - 1));
  g.d2.topLeftCorner(h - 1, w - 1) = s * (u.block(1, 1, h - 1, w - 1) - u.block(0, 0, h - 1, w - 1));
  for (Plane* p : {&g.d1, &g.d2}) {
    p->col(w - 1).head(h - 1) = p->col(w - 2).head(h - 1);
    p->row(h - 1) = p->row(h - 2);
  }
  return g;
}

TensorField smoothed_tensor(const Image& img, double rho) {
  if (!(rho >= 0.0)) throw InvalidInput("rho must be >= 0");
  if (img.channels() != 1) throw InvalidInput("rotated gradients expect a 1-channel image");
  const int h = static_cast<int>(img.height()), w = static_cast<int>(img.width());
  if (h < 2 || w < 2) throw InvalidInput("rotated gradients need an image of at least 2x2");
  const Plane& u = img.plane(0);
  const double s = 1.0 / std::numbers::sqrt2;

  // Gradient products on the half grid. Sample (i,j) sits at (i+1/2, j+1/2);
  // the last row and column repeat their neighbours.
  struct Products {
    double xx, xy, yy;
  };
  const auto half = [&](int i, int j) {
    i = std::clamp(i, 0, h - 2);
    j = std::clamp(j, 0, w - 2);
    const double d1 = s * (u(i, j + 1) - u(i + 1, j));
    const double d2 = s * (u(i + 1, j + 1) - u(i, j));
    // Rotate the 45-degree components back onto the image axes.
    const double gx = s * (d1 + d2), gy = s * (d2 - d1);
    return Products{gx * gx, gx * gy, gy * gy};
  };

  // Each pixel center averages the four half-grid samples around it. Fused
  // into one pass so large images do not stream a dozen temporaries.
  TensorField t{Plane(h, w), Plane(h, w), Plane(h, w)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Products a = half(y - 1, x - 1), b = half(y - 1, x), c = half(y, x - 1), d = half(y, x);
      t.xx(y, x) = 0.25 * (a.xx + b.xx + c.xx + d.xx);
      t.xy(y, x) = 0.25 * (a.xy + b.xy + c.xy + d.xy);
      t.yy(y, x) = 0.25 * (a.yy + b.yy + c.yy + d.yy);
    }
  }
  const Eigen::VectorXd k = gaussian_kernel(rho);
  t.xx = convolve_separable(t.xx, k);
  t.xy = convolve_separable(t.xy, k);
  t.yy = convolve_separable(t.yy, k);
  return t;
}

FeatureTriple eigen_features(double xx, double xy, double yy) {
  const double half_trace = 0.5 * (xx + yy);
  const double half_diff = 0.5 * (xx - yy);
  const double disc = std::sqrt(half_diff * half_diff + xy * xy);
  const double l1 = std::max(0.0, half_trace + disc);
  const double l2 = std::max(0.0, half_trace - disc);
  if (l1 <= 0.0) return {};
  double theta = 0.5 * std::atan2(2.0 * xy, xx - yy);
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  const double s1 = std::sqrt(l1), s2 = std::sqrt(l2);
  return {theta, s1, std::clamp((s1 - s2) / (s1 + s2), 0.0, 1.0)};
}

FeatureField compute_features(const TensorField& t) {
  const Eigen::Index h = t.xx.rows(), w = t.xx.cols();
  FeatureField f{Plane(h, w), Plane(h, w), Plane(h, w)};
#pragma omp parallel for schedule(static)
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const FeatureTriple ft = eigen_features(t.xx(y, x), t.xy(y, x), t.yy(y, x));
      f.orientation(y, x) = ft.orientation;
      f.strength(y, x) = ft.strength;
      f.coherence(y, x) = ft.coherence;
    }
  }
  return f;
}

int select_bucket(const FeatureTriple& f, const QuantizerSpec& q) {
  int o = static_cast<int>(std::floor(f.orientation / std::numbers::pi * q.orientation_bins));
  o %= q.orientation_bins;
  if (o < 0) o += q.orientation_bins;
  const auto bin = [](const std::vector<double>& t, double v) {
    return static_cast<int>(std::upper_bound(t.begin(), t.end(), v) - t.begin());
  };
  const int s = bin(q.strength_thresholds, f.strength);
  const int c = bin(q.coherence_thresholds, f.coherence);
  return o + q.orientation_bins * (s + q.strength_bins * c);
}

BucketMap select_buckets(const Image& img, const QuantizerSpec& q) {
  // No gradient exists on a single row or column: every pixel gets the
  // degenerate (zero) feature triple.
  if (img.width() < 2 || img.height() < 2)
    return BucketMap::Constant(img.height(), img.width(), select_bucket({}, q));
  const TensorField t = smoothed_tensor(img, q.rho);
  const Eigen::Index h = t.xx.rows(), w = t.xx.cols();
  BucketMap map(h, w);
#pragma omp parallel for schedule(static)
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      map(y, x) = select_bucket(eigen_features(t.xx(y, x), t.xy(y, x), t.yy(y, x)), q);
  return map;
}

}  // namespace styler
