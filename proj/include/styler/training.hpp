#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "styler/blade.hpp"

namespace styler {

/// One of the 8 symmetries of the square: `variant` in [0, 8), bit 2 selects a
/// horizontal flip applied first, the low bits a counter-clockwise rotation
/// by 90 degrees times (variant & 3).
Plane dihedral(const Plane& p, int variant);
Image dihedral(const Image& img, int variant);

enum class Augmentation { none, dihedral };

/// Streaming normal equations for every bucket: gram = A^T A, moment = A^T b,
/// count = rows of A. Patches are buffered and folded in with symmetric
/// rank-k updates.
class TrainingAccumulator {
 public:
  TrainingAccumulator(int side, int buckets);

  int side() const { return side_; }
  int taps() const { return side_ * side_; }
  int bucket_count() const { return static_cast<int>(counts_.size()); }

  /// Adds one (patch, response) sample to bucket k. `patch` has taps() values.
  void add(int bucket, const double* patch, double response);

  /// Full symmetric N x N Gram matrix of bucket k.
  Eigen::MatrixXd gram(int bucket) const;
  const Eigen::VectorXd& moment(int bucket) const;
  std::int64_t count(int bucket) const { return counts_.at(bucket); }
  std::int64_t total_count() const;

  bool all_finite() const;

  /// Merges another accumulator of identical shape (sum of statistics).
  TrainingAccumulator& operator+=(const TrainingAccumulator& other);

 private:
  void flush(int bucket) const;
  void flush_all() const;

  int side_;
  mutable std::vector<Eigen::MatrixXd> gram_lower_;
  mutable std::vector<Eigen::VectorXd> moment_;
  std::vector<std::int64_t> counts_;
  // Pending rows per bucket, folded into gram/moment when full or on read.
  mutable std::vector<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> pending_;
  mutable std::vector<Eigen::VectorXd> pending_response_;
  mutable std::vector<int> pending_rows_;
};

/// Adds every pixel of (input, target) to the bucket chosen by the structure
/// tensor of the input. With dihedral augmentation the 8 symmetric variants of
/// the pair are each accumulated. Both images must be 1-channel and equal in
/// size; the accumulator footprint decides the patch size.
void accumulate(TrainingAccumulator& acc, const Image& input, const Image& target,
                const QuantizerSpec& quantizer, Augmentation augmentation = Augmentation::dihedral);

/// weight * (Dx^T Dx + Dy^T Dy) for forward differences between horizontally
/// and vertically adjacent taps of a rows x cols footprint.
Eigen::MatrixXd build_regularizer(int rows, int cols, double weight = 1.0);

struct SolveOptions {
  double lambda = 1.0 / 1024.0 / (255.0 * 255.0);  ///< 2^-10 in 8-bit intensity units; pixels here are in [0, 1]
  bool scale_by_count = true;     ///< multiply lambda by the bucket's sample count
  double max_condition = 1e12;    ///< reciprocal-condition cutoff for fallback
};

/// underdetermined: fewer samples than taps, so A^T A is rank deficient.
enum class BucketStatus { solved, empty, underdetermined, ill_conditioned };

struct SolveResult {
  FilterBank filters;
  std::vector<BucketStatus> status;
};

/// Per bucket h = (lambda' Q + A^T A)^-1 A^T b with a Cholesky solve, where
/// lambda' is lambda (times the sample count when scale_by_count). Empty,
/// underdetermined or ill-conditioned buckets fall back to the centered delta. Throws
/// CorruptState on non-finite statistics.
SolveResult solve(const TrainingAccumulator& acc, const Eigen::MatrixXd& regularizer, const SolveOptions& options);

/// Equal-mass strength thresholds (bins - 1 of them) over the structure
/// tensor strengths of `inputs`, sampled on a stride x stride grid. Ties are
/// nudged so the result is strictly ascending.
std::vector<double> strength_quantile_thresholds(std::span<const Image> inputs, double rho, int bins,
                                                 int stride = 2);

/// Training configuration for a full model. Strength thresholds are derived
/// from the training inputs when `quantizer.strength_thresholds` is empty.
struct TrainingConfig {
  int side = 5;
  QuantizerSpec quantizer;
  SolveOptions solve;
  Augmentation augmentation = Augmentation::dihedral;
  int passes = 1;
};

/// Accumulates the pairs and solves. Owns the accumulator so pairs can be
/// streamed one at a time.
class BladeTrainer {
 public:
  /// `quantizer` must be complete (thresholds set).
  BladeTrainer(int side, QuantizerSpec quantizer, Augmentation augmentation = Augmentation::dihedral);

  void add_pair(const Image& input, const Image& target);
  const TrainingAccumulator& accumulator() const { return acc_; }
  BladeModel finish(const SolveOptions& options, int passes = 1, SolveResult* report = nullptr) const;

 private:
  int side_;
  QuantizerSpec quantizer_;
  Augmentation augmentation_;
  TrainingAccumulator acc_;
};

/// Convenience: thresholds (if missing) + accumulate + solve.
BladeModel train_model(std::span<const Image> inputs, std::span<const Image> targets, TrainingConfig config);

}  // namespace styler
