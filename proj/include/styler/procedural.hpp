#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "styler/pipeline.hpp"

namespace styler {

/// Sampling rules for random styles.
struct ProceduralRules {
  int min_blocks = 4;
  int max_blocks = 9;
  double grayscale_probability = 0.2;
  double xdog_sigma[2] = {0.5, 8.0};
  double xdog_p[2] = {1.0, 40.0};
  double threshold_phi[2] = {0.013, 0.059};
  double threshold_epsilon[2] = {50.0, 110.0};
  double detail_delta[2] = {-100.0, 60.0};
  int posterize_levels[2] = {5, 12};
  double saturation[2] = {1.5, 2.2};
  double size_percent[2] = {100.0, 300.0};
};

/// Block kinds that may appear more than once in a generated style.
bool procedural_repeatable(const std::string& kind);

/// Draws a random background-only style. The draw sequence is a pure
/// function of the seed (64-bit Mersenne Twister seeded with `seed`;
/// uniform reals use the top 53 bits of one output, integers use rejection
/// sampling), so styles reproduce across platforms.
StylePipeline generate_style(std::uint64_t seed, const ProceduralRules& rules = {});

/// Aesthetic scorer plugin. Implementations must be thread-safe.
class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Scores one rendered image; throws Error on failure.
  virtual double score(const Image& rendered) const = 0;
};

/// Built-in heuristic in [0, 10]: mean of a normalized colorfulness term and
/// an edge-density term.
class HeuristicScorer final : public Scorer {
 public:
  double score(const Image& rendered) const override;
};

/// Runs `command <png-path>` through the shell and parses the first token of
/// its standard output as a float. At most `max_concurrent` commands run at
/// once across all threads sharing this scorer.
class CommandScorer final : public Scorer {
 public:
  explicit CommandScorer(std::string command, int max_concurrent = 4);
  ~CommandScorer() override;
  double score(const Image& rendered) const override;
  int max_concurrent() const { return max_concurrent_; }

 private:
  struct Gate;
  std::string command_;
  int max_concurrent_;
  Gate* gate_;
};

/// Mean scorer output over the style rendered on every image.
double score_style(const StylePipeline& style, std::span<const Image> images, const Scorer& scorer,
                   const ModelRegistry* models = nullptr);

struct ScoredStyle {
  StylePipeline style;
  std::optional<double> score;  ///< empty when rendering or scoring failed
  std::string error;
};

/// Scores a batch; a failing style is reported and the batch continues.
/// `workers` <= 0 picks one worker per hardware thread.
std::vector<ScoredStyle> score_styles(std::span<const StylePipeline> styles, std::span<const Image> images,
                                      const Scorer& scorer, const ModelRegistry* models = nullptr, int workers = 0);

/// Sorts by score, highest first; unscored entries go last. Stable.
void sort_by_score(std::vector<ScoredStyle>& entries);

struct ContactSheetOptions {
  bool sorted = false;
  int thumb_edge = 256;
};

struct ContactSheetEntry {
  std::string style_file;  ///< relative to the output directory
  std::string thumb_file;  ///< empty when rendering failed
  std::optional<double> score;
  std::string error;
};

/// Writes report.html, styles/*.json and thumbs/*.png into `out_dir`.
/// Per-entry rendering failures are recorded in the report. Throws
/// InvalidInput for an empty list and IoError when the directory or report
/// cannot be written.
std::vector<ContactSheetEntry> contact_sheet(std::vector<ScoredStyle> entries, const Image& img,
                                             const std::filesystem::path& out_dir,
                                             const ContactSheetOptions& options = {},
                                             const ModelRegistry* models = nullptr);

}  // namespace styler
