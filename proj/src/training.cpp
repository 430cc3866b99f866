#include "styler/training.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace styler {

namespace {

constexpr int kBatchRows = 128;

Plane rotate_ccw(const Plane& p) { return p.transpose().colwise().reverse(); }

}  // namespace

Plane dihedral(const Plane& p, int variant) {
  if (variant < 0 || variant >= 8) throw InvalidInput("dihedral variant must be in [0, 8)");
  Plane out = (variant & 4) ? Plane(p.rowwise().reverse()) : p;
  for (int k = 0; k < (variant & 3); ++k) out = rotate_ccw(out);
  return out;
}

Image dihedral(const Image& img, int variant) {
  std::vector<Plane> planes;
  for (const auto& p : img.planes()) planes.push_back(dihedral(p, variant));
  return Image(std::move(planes));
}

TrainingAccumulator::TrainingAccumulator(int side, int buckets) : side_(side) {
  if (side < 1) throw InvalidInput("accumulator footprint side must be >= 1");
  if (buckets < 1) throw InvalidInput("accumulator needs at least one bucket");
  const int n = side * side;
  gram_lower_.assign(buckets, Eigen::MatrixXd::Zero(n, n));
  moment_.assign(buckets, Eigen::VectorXd::Zero(n));
  counts_.assign(buckets, 0);
  pending_.resize(buckets);
  pending_response_.resize(buckets);
  pending_rows_.assign(buckets, 0);
}

void TrainingAccumulator::add(int bucket, const double* patch, double response) {
  if (pending_[bucket].rows() == 0) {
    pending_[bucket].resize(kBatchRows, taps());
    pending_response_[bucket].resize(kBatchRows);
  }
  int& row = pending_rows_[bucket];
  std::copy(patch, patch + taps(), pending_[bucket].row(row).data());
  pending_response_[bucket][row] = response;
  ++counts_[bucket];
  if (++row == kBatchRows) flush(bucket);
}

void TrainingAccumulator::flush(int bucket) const {
  const int rows = pending_rows_[bucket];
  if (rows == 0) return;
  const auto a = pending_[bucket].topRows(rows);
  gram_lower_[bucket].selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  moment_[bucket].noalias() += a.transpose() * pending_response_[bucket].head(rows);
  pending_rows_[bucket] = 0;
}

void TrainingAccumulator::flush_all() const {
  for (int k = 0; k < bucket_count(); ++k) flush(k);
}

Eigen::MatrixXd TrainingAccumulator::gram(int bucket) const {
  flush(bucket);
  return gram_lower_.at(bucket).selfadjointView<Eigen::Lower>();
}

const Eigen::VectorXd& TrainingAccumulator::moment(int bucket) const {
  flush(bucket);
  return moment_.at(bucket);
}

std::int64_t TrainingAccumulator::total_count() const {
  std::int64_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

bool TrainingAccumulator::all_finite() const {
  flush_all();
  for (int k = 0; k < bucket_count(); ++k) {
    const Eigen::MatrixXd lower = gram_lower_[k].triangularView<Eigen::Lower>();
    if (!lower.allFinite() || !moment_[k].allFinite()) return false;
  }
  return true;
}

TrainingAccumulator& TrainingAccumulator::operator+=(const TrainingAccumulator& other) {
  if (other.side_ != side_ || other.bucket_count() != bucket_count())
    throw InvalidInput("cannot merge accumulators of different shape");
  flush_all();
  other.flush_all();
  for (int k = 0; k < bucket_count(); ++k) {
    gram_lower_[k] += other.gram_lower_[k];
    moment_[k] += other.moment_[k];
    counts_[k] += other.counts_[k];
  }
  return *this;
}

void accumulate(TrainingAccumulator& acc, const Image& input, const Image& target,
                const QuantizerSpec& quantizer, Augmentation augmentation) {
  if (input.channels() != 1 || target.channels() != 1)
    throw InvalidInput("training pairs must be 1-channel images");
  if (input.width() != target.width() || input.height() != target.height())
    throw InvalidInput("training input and target dimensions differ");
  if (quantizer.bucket_count() != acc.bucket_count())
    throw InvalidInput("quantizer bucket count does not match the accumulator");
  quantizer.validate();

  TrainingAccumulator local(acc.side(), acc.bucket_count());
  const int side = acc.side();
  const int r = side / 2;
  std::vector<double> patch(static_cast<std::size_t>(side) * side);
  const int variants = augmentation == Augmentation::dihedral ? 8 : 1;
  for (int v = 0; v < variants; ++v) {
    const Plane z = dihedral(input.plane(0), v);
    const Plane u = dihedral(target.plane(0), v);
    const BucketMap buckets = select_buckets(Image(z), quantizer);
    const int h = static_cast<int>(z.rows()), w = static_cast<int>(z.cols());
    for (int y = 0; y < h; ++y) {
      const bool row_inside = y >= r && y < h - r;
      for (int x = 0; x < w; ++x) {
        double* dst = patch.data();
        if (row_inside && x >= r && x < w - r) {
          for (int dy = -r; dy <= r; ++dy) {
            const double* src = z.row(y + dy).data() + (x - r);
            dst = std::copy(src, src + side, dst);
          }
        } else {
          for (int dy = -r; dy <= r; ++dy) {
            const int yy = clamp_index(y + dy, h);
            for (int dx = -r; dx <= r; ++dx) *dst++ = z(yy, clamp_index(x + dx, w));
          }
        }
        local.add(buckets(y, x), patch.data(), u(y, x));
      }
    }
  }
  acc += local;
}

Eigen::MatrixXd build_regularizer(int rows, int cols, double weight) {
  if (rows < 1 || cols < 1) throw InvalidInput("regularizer footprint must be at least 1x1");
  const int n = rows * cols;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  auto couple = [&](int a, int b) {
    q(a, a) += weight;
    q(b, b) += weight;
    q(a, b) -= weight;
    q(b, a) -= weight;
  };
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) {
      const int i = y * cols + x;
      if (x + 1 < cols) couple(i, i + 1);
      if (y + 1 < rows) couple(i, i + cols);
    }
  return q;
}

SolveResult solve(const TrainingAccumulator& acc, const Eigen::MatrixXd& regularizer, const SolveOptions& options) {
  const int n = acc.taps();
  if (regularizer.rows() != n || regularizer.cols() != n)
    throw InvalidInput("regularizer size does not match the footprint");
  if (!(options.lambda >= 0.0)) throw InvalidInput("regularization weight must be >= 0");
  if (!acc.all_finite()) throw CorruptState("training statistics hold non-finite values");

  SolveResult result;
  result.filters = FilterBank::Zero(acc.bucket_count(), n);
  result.status.assign(acc.bucket_count(), BucketStatus::solved);
  const int center = n / 2;
  for (int k = 0; k < acc.bucket_count(); ++k) {
    if (acc.count(k) == 0) {
      result.filters(k, center) = 1.0;
      result.status[k] = BucketStatus::empty;
      continue;
    }
    if (acc.count(k) < n) {
      result.filters(k, center) = 1.0;
      result.status[k] = BucketStatus::underdetermined;
      continue;
    }
    const double lambda =
        options.lambda * (options.scale_by_count ? static_cast<double>(acc.count(k)) : 1.0);
    const Eigen::MatrixXd normal = lambda * regularizer + acc.gram(k);
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success || !(llt.rcond() * options.max_condition >= 1.0)) {
      result.filters(k, center) = 1.0;
      result.status[k] = BucketStatus::ill_conditioned;
      continue;
    }
    result.filters.row(k) = llt.solve(acc.moment(k)).transpose();
  }
  return result;
}

std::vector<double> strength_quantile_thresholds(std::span<const Image> inputs, double rho, int bins, int stride) {
  if (bins < 1) throw InvalidInput("strength bins must be >= 1");
  if (bins == 1) return {};
  if (stride < 1) stride = 1;
  std::vector<double> values;
  for (const auto& img : inputs) {
    if (img.channels() != 1) throw InvalidInput("strength thresholds need 1-channel inputs");
    const FeatureField f = compute_features(smoothed_tensor(img, rho));
    for (Eigen::Index y = 0; y < f.strength.rows(); y += stride)
      for (Eigen::Index x = 0; x < f.strength.cols(); x += stride) values.push_back(f.strength(y, x));
  }
  if (values.empty()) throw InvalidInput("strength thresholds need at least one training image");
  std::sort(values.begin(), values.end());
  std::vector<double> t;
  for (int k = 1; k < bins; ++k) {
    const double pos = static_cast<double>(k) / bins * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(values.size() - 1, lo + 1);
    double v = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    if (!t.empty() && !(v > t.back())) v = std::nextafter(t.back(), 1e300) + 1e-12;
    t.push_back(v);
  }
  return t;
}

BladeTrainer::BladeTrainer(int side, QuantizerSpec quantizer, Augmentation augmentation)
    : side_(side), quantizer_(std::move(quantizer)), augmentation_(augmentation),
      acc_(side, quantizer_.bucket_count()) {
  quantizer_.validate();
}

void BladeTrainer::add_pair(const Image& input, const Image& target) {
  accumulate(acc_, input, target, quantizer_, augmentation_);
}

BladeModel BladeTrainer::finish(const SolveOptions& options, int passes, SolveResult* report) const {
  SolveResult result = solve(acc_, build_regularizer(side_, side_), options);
  BladeModel model;
  model.side = side_;
  model.quantizer = quantizer_;
  model.passes = passes;
  model.filters = result.filters;
  if (report) *report = std::move(result);
  model.validate();
  return model;
}

BladeModel train_model(std::span<const Image> inputs, std::span<const Image> targets, TrainingConfig config) {
  if (inputs.size() != targets.size()) throw InvalidInput("training needs one target per input");
  if (config.quantizer.strength_thresholds.empty() && config.quantizer.strength_bins > 1)
    config.quantizer.strength_thresholds =
        strength_quantile_thresholds(inputs, config.quantizer.rho, config.quantizer.strength_bins);
  if (config.quantizer.coherence_thresholds.empty() && config.quantizer.coherence_bins > 1)
    config.quantizer.coherence_thresholds = QuantizerSpec::uniform_coherence_thresholds(config.quantizer.coherence_bins);
  BladeTrainer trainer(config.side, config.quantizer, config.augmentation);
  for (std::size_t i = 0; i < inputs.size(); ++i) trainer.add_pair(inputs[i], targets[i]);
  return trainer.finish(config.solve, config.passes);
}

}  // namespace styler
