#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "styler/error.hpp"

namespace styler {

/// One channel of a raster: rows = height, cols = width, row-major so that a
/// scanline is contiguous.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;

/// Planar floating-point raster with 1 or 3 channels. Values are nominally in
/// [0,1]. A single-channel image may carry the two chroma planes (U,V) that
/// were removed by the grayscale block so that color can be restored later.
template <typename Scalar>
class BasicImage {
 public:
  using PlaneType = PlaneT<Scalar>;
  using Chroma = std::array<PlaneType, 2>;

  BasicImage() = default;

  BasicImage(int width, int height, int channels, Scalar fill = Scalar(0)) {
    if (width < 1 || height < 1) throw InvalidInput("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidInput("image must have 1 or 3 channels");
    planes_.assign(channels, PlaneType::Constant(height, width, fill));
  }

  explicit BasicImage(std::vector<PlaneType> planes) : planes_(std::move(planes)) {
    if (planes_.size() != 1 && planes_.size() != 3)
      throw InvalidInput("image must have 1 or 3 channels");
    for (const auto& p : planes_) {
      if (p.rows() != planes_[0].rows() || p.cols() != planes_[0].cols() || p.size() == 0)
        throw InvalidInput("image planes must share non-empty dimensions");
    }
  }

  explicit BasicImage(PlaneType luma) : BasicImage(std::vector<PlaneType>{std::move(luma)}) {}

  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }

  PlaneType& plane(int c) { return planes_.at(c); }
  const PlaneType& plane(int c) const { return planes_.at(c); }
  std::vector<PlaneType>& planes() { return planes_; }
  const std::vector<PlaneType>& planes() const { return planes_; }

  Scalar operator()(int x, int y, int c = 0) const { return planes_[c](y, x); }
  Scalar& operator()(int x, int y, int c = 0) { return planes_[c](y, x); }

  bool has_chroma() const { return chroma_.has_value(); }
  const Chroma& chroma() const {
    if (!chroma_) throw StateError("image carries no stashed chroma");
    return *chroma_;
  }
  void set_chroma(Chroma chroma) {
    for (const auto& p : chroma) {
      if (p.rows() != height() || p.cols() != width())
        throw InvalidInput("stashed chroma must match the image dimensions");
    }
    chroma_ = std::move(chroma);
  }
  void clear_chroma() { chroma_.reset(); }

  bool all_finite() const {
    for (const auto& p : planes_)
      if (!p.allFinite()) return false;
    return true;
  }

  template <typename Other>
  BasicImage<Other> cast() const {
    std::vector<PlaneT<Other>> out;
    out.reserve(planes_.size());
    for (const auto& p : planes_) out.push_back(p.template cast<Other>());
    BasicImage<Other> result(std::move(out));
    if (chroma_) {
      result.set_chroma({(*chroma_)[0].template cast<Other>(), (*chroma_)[1].template cast<Other>()});
    }
    return result;
  }

  friend bool operator==(const BasicImage& a, const BasicImage& b) {
    if (a.channels() != b.channels() || a.width() != b.width() || a.height() != b.height())
      return false;
    for (int c = 0; c < a.channels(); ++c)
      if ((a.planes_[c] != b.planes_[c]).any()) return false;
    return true;
  }

 private:
  std::vector<PlaneType> planes_;
  std::optional<Chroma> chroma_;
};

using Image = BasicImage<double>;

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

/// Replicate-padded read: out-of-range coordinates are clamped to the border.
template <typename Scalar>
Scalar sample_clamped(const BasicImage<Scalar>& img, int x, int y, int c = 0) {
  return img.plane(c)(clamp_index(y, img.height()), clamp_index(x, img.width()));
}

template <typename Derived>
typename Derived::Scalar sample_clamped(const Eigen::DenseBase<Derived>& plane, int x, int y) {
  return plane(clamp_index(y, static_cast<int>(plane.rows())),
               clamp_index(x, static_cast<int>(plane.cols())));
}

/// Bilinear sample at a continuous position, pixel centers at integer
/// coordinates, replicate padding outside.
template <typename Derived>
double sample_bilinear(const Eigen::DenseBase<Derived>& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int xa = clamp_index(x0, w), xb = clamp_index(x0 + 1, w);
  const int ya = clamp_index(y0, h), yb = clamp_index(y0 + 1, h);
  const double top = (1.0 - tx) * plane(ya, xa) + tx * plane(ya, xb);
  const double bottom = (1.0 - tx) * plane(yb, xa) + tx * plane(yb, xb);
  return (1.0 - ty) * top + ty * bottom;
}

/// Returns a copy with every sample clipped to [0,1].
Image clip01(Image img);

inline Plane clip01(const Plane& p) { return p.max(0.0).min(1.0); }

}  // namespace styler
