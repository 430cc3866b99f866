#include "styler/blade.hpp"

#include "styler/color.hpp"

namespace styler {

void BladeModel::validate() const {
  if (side < 3 || side > 11 || side % 2 == 0) throw InvalidInput("model footprint side must be odd in [3, 11]");
  quantizer.validate();
  if (filters.rows() != bucket_count() || filters.cols() != taps())
    throw InvalidInput("filter bank shape does not match the quantizer and footprint");
  if (!filters.allFinite()) throw InvalidInput("filter bank holds non-finite coefficients");
  if (passes < 1) throw InvalidInput("model pass count must be >= 1");
}

BladeModel BladeModel::identity(int side, QuantizerSpec quantizer) {
  BladeModel m;
  m.side = side;
  m.quantizer = std::move(quantizer);
  m.filters = FilterBank::Zero(m.bucket_count(), m.taps());
  m.filters.col(center_tap(side)).setOnes();
  return m;
}

Plane apply_filter_bank(const Plane& src, const BucketMap& buckets, const FilterBank& filters, int side) {
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  const int r = side / 2;
  Plane out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const bool row_inside = y >= r && y < h - r;
    for (int x = 0; x < w; ++x) {
      const double* coef = filters.row(buckets(y, x)).data();
      double sum = 0.0;
      if (row_inside && x >= r && x < w - r) {
        for (int dy = -r; dy <= r; ++dy) {
          const double* z = src.row(y + dy).data() + (x - r);
          for (int dx = 0; dx < side; ++dx) sum += *coef++ * z[dx];
        }
      } else {
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = clamp_index(y + dy, h);
          for (int dx = -r; dx <= r; ++dx) sum += *coef++ * src(yy, clamp_index(x + dx, w));
        }
      }
      out(y, x) = sum;
    }
  }
  return out;
}

Image infer(const Image& img, const BladeModel& model, int passes) {
  if (img.channels() != 1) throw InvalidInput("BLADE inference expects a 1-channel image");
  const int n = passes < 0 ? model.passes : passes;
  Plane current = img.plane(0);
  for (int p = 0; p < n; ++p) {
    const BucketMap buckets = select_buckets(Image(current), model.quantizer);
    current = apply_filter_bank(current, buckets, model.filters, model.side);
  }
  Image out(std::move(current));
  if (img.has_chroma()) out.set_chroma(img.chroma());
  return out;
}

Image infer_luma(const Image& img, const BladeModel& model, int passes) {
  if (img.channels() == 1) return infer(img, model, passes);
  return with_luma(img, infer(Image(luma(img)), model, passes).plane(0));
}

}  // namespace styler
