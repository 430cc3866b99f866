#pragma once

#include <map>
#include <string>

#include <Eigen/Core>

#include "styler/image.hpp"
#include "styler/structure_tensor.hpp"

namespace styler {

/// K x N filter coefficients, one row per bucket. Taps are ordered row-major
/// over the footprint: dy = -r..r outer, dx = -r..r inner.
using FilterBank = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Descriptive metadata kept next to a model (not part of the binary file).
struct ModelInfo {
  std::string name;
  std::string effect;
  std::map<std::string, double> params;
  std::string notes;
};

/// A trained BLADE filter bank plus everything needed to reproduce filter
/// selection at inference time.
struct BladeModel {
  int side = 5;
  QuantizerSpec quantizer;
  int passes = 1;
  FilterBank filters;
  ModelInfo info;

  int taps() const { return side * side; }
  int bucket_count() const { return quantizer.bucket_count(); }

  /// Throws InvalidInput unless side is odd in [3, 11], the bank has one
  /// finite row per bucket and the quantizer is consistent.
  void validate() const;

  /// Every bucket holds the centered delta.
  static BladeModel identity(int side, QuantizerSpec quantizer);
};

/// Row-major tap index of the footprint center.
inline int center_tap(int side) { return (side * side) / 2; }

/// Applies one filter per pixel, selected by `buckets`, with replicate padding.
Plane apply_filter_bank(const Plane& src, const BucketMap& buckets, const FilterBank& filters, int side);

/// BLADE inference on a 1-channel image: structure-tensor bucket selection
/// followed by the selected FIR filter. Repeated `passes` times (defaults to
/// the model's pass count). The output is not clipped.
Image infer(const Image& img, const BladeModel& model, int passes = -1);

/// Applies inference to the luma of any image, reattaching chroma for RGB.
Image infer_luma(const Image& img, const BladeModel& model, int passes = -1);

}  // namespace styler
