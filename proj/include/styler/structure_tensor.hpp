#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "styler/image.hpp"

namespace styler {

/// Local structure at one pixel, from the eigensystem of the smoothed
/// structure tensor.
struct FeatureTriple {
  double orientation = 0.0;  ///< angle of the dominant eigenvector, [0, pi)
  double strength = 0.0;     ///< sqrt(lambda1)
  double coherence = 0.0;    ///< (sqrt l1 - sqrt l2) / (sqrt l1 + sqrt l2), in [0, 1]
};

/// Quantization of FeatureTriple into a filter index.
struct QuantizerSpec {
  int orientation_bins = 16;
  int strength_bins = 5;
  int coherence_bins = 3;
  std::vector<double> strength_thresholds;   ///< strength_bins - 1, ascending
  std::vector<double> coherence_thresholds;  ///< coherence_bins - 1, ascending
  double rho = 2.0;                          ///< tensor smoothing sigma in pixels

  int bucket_count() const { return orientation_bins * strength_bins * coherence_bins; }

  /// Throws InvalidInput when counts or thresholds are inconsistent.
  void validate() const;

  /// Coherence thresholds k/C, k = 1..C-1.
  static std::vector<double> uniform_coherence_thresholds(int bins);

  friend bool operator==(const QuantizerSpec&, const QuantizerSpec&) = default;
};

/// Gradients in 45-degree rotated coordinates on the half-pixel grid:
/// d1 = (u(x+1,y) - u(x,y+1)) / sqrt2, d2 = (u(x+1,y+1) - u(x,y)) / sqrt2.
/// Sample (x,y) sits at (x+1/2, y+1/2); the last row/column replicate the
/// (w-1) x (h-1) valid samples so both planes are full size.
struct RotatedGradients {
  Plane d1;
  Plane d2;
};

RotatedGradients rotated_gradients(const Image& img);

/// Symmetric 2x2 tensor field [[xx, xy], [xy, yy]] at pixel centers.
struct TensorField {
  Plane xx;
  Plane xy;
  Plane yy;
};

/// Structure tensor from the rotated-stencil gradients, brought back to image
/// axes, averaged from the four surrounding half-grid samples onto pixel
/// centers, then smoothed by a Gaussian of standard deviation rho.
TensorField smoothed_tensor(const Image& img, double rho);

FeatureTriple eigen_features(double xx, double xy, double yy);

struct FeatureField {
  Plane orientation;
  Plane strength;
  Plane coherence;
};

FeatureField compute_features(const TensorField& tensor);

/// Flat index o + O (s + S c); orientation bins are uniform over [0, pi),
/// strength/coherence land in the upper bin when equal to a threshold.
int select_bucket(const FeatureTriple& f, const QuantizerSpec& q);

/// Per-pixel bucket indices, row-major (height x width).
using BucketMap = Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

BucketMap select_buckets(const Image& img, const QuantizerSpec& q);

}  // namespace styler
