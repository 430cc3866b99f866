#include "styler/procedural.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "styler/color.hpp"
#include "styler/error.hpp"
#include "styler/png_io.hpp"
#include "styler/resample.hpp"
#include "styler/spatial_ops.hpp"

namespace styler {

namespace fs = std::filesystem;

// ------------------------------------------------------------ generation

namespace {

/// Portable draws on top of mt19937_64 (the distributions in <random> are
/// implementation-defined, the engine is not).
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double real(const double (&range)[2]) { return range[0] + unit() * (range[1] - range[0]); }

  int integer(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

 private:
  std::mt19937_64 engine_;
};

const std::vector<std::string>& pool_kinds() {
  static const std::vector<std::string> kinds = {"flow_xdog",      "tv_flow",    "soft_threshold", "detail_control",
                                                 "luma_posterize", "saturation", "scale"};
  return kinds;
}

BlockDescriptor draw_block(const std::string& kind, Draw& d, const ProceduralRules& r) {
  BlockDescriptor b{kind, Json::object(), true};
  if (kind == "flow_xdog") {
    b.params["sigma"] = d.real(r.xdog_sigma);
    b.params["p"] = d.real(r.xdog_p);
  } else if (kind == "soft_threshold") {
    b.params["phi"] = d.real(r.threshold_phi);
    b.params["epsilon"] = d.real(r.threshold_epsilon);
  } else if (kind == "detail_control") {
    b.params["delta"] = d.real(r.detail_delta);
  } else if (kind == "luma_posterize") {
    b.params["levels"] = d.integer(r.posterize_levels[0], r.posterize_levels[1]);
  } else if (kind == "saturation") {
    b.params["s"] = d.real(r.saturation);
  } else if (kind == "scale") {
    b.params["size"] = d.real(r.size_percent);
  }
  return b;
}

}  // namespace

bool procedural_repeatable(const std::string& kind) { return kind == "flow_xdog" || kind == "tv_flow"; }

StylePipeline generate_style(std::uint64_t seed, const ProceduralRules& rules) {
  Draw d(seed);
  const int n = d.integer(rules.min_blocks, rules.max_blocks);
  const bool gray = d.unit() < rules.grayscale_probability;

  std::vector<std::string> available = pool_kinds();
  std::vector<BlockDescriptor> blocks;
  for (int i = 0; i < n - (gray ? 1 : 0); ++i) {
    const int pick = d.integer(0, static_cast<int>(available.size()) - 1);
    const std::string kind = available[pick];
    blocks.push_back(draw_block(kind, d, rules));
    if (!procedural_repeatable(kind)) available.erase(available.begin() + pick);
  }
  if (gray) {
    // Saturation needs color, so grayscale may only follow the last one.
    int first = 0;
    for (int i = 0; i < static_cast<int>(blocks.size()); ++i)
      if (blocks[i].kind == "saturation") first = i + 1;
    const int at = d.integer(first, static_cast<int>(blocks.size()));
    blocks.insert(blocks.begin() + at, BlockDescriptor{"to_grayscale", Json::object(), true});
  }

  StylePipeline p;
  p.name = "procedural-" + std::to_string(seed);
  p.background = std::move(blocks);
  return p;
}

// --------------------------------------------------------------- scoring

double HeuristicScorer::score(const Image& rendered) const {
  const Image rgb = rendered.channels() == 3 ? rendered : gray_to_rgb(Image(rendered.plane(0)));
  const Plane rg = 255.0 * (rgb.plane(0) - rgb.plane(1));
  const Plane yb = 255.0 * (0.5 * (rgb.plane(0) + rgb.plane(1)) - rgb.plane(2));
  auto stats = [](const Plane& p) {
    const double m = p.mean();
    return std::pair{m, std::sqrt(std::max(0.0, (p - m).square().mean()))};
  };
  const auto [mrg, srg] = stats(rg);
  const auto [myb, syb] = stats(yb);
  const double colorfulness = std::hypot(srg, syb) + 0.3 * std::hypot(mrg, myb);
  const double color_term = std::min(1.0, colorfulness / 100.0);

  const Plane edges = sobel(rgb).plane(0);
  const double density = (edges > 0.1).cast<double>().mean();
  const double edge_term = std::min(1.0, density / 0.25);
  return 10.0 * (0.5 * color_term + 0.5 * edge_term);
}

struct CommandScorer::Gate {
  std::mutex mutex;
  std::condition_variable cv;
  int active = 0;
};

CommandScorer::CommandScorer(std::string command, int max_concurrent)
    : command_(std::move(command)), max_concurrent_(max_concurrent), gate_(new Gate) {
  if (command_.empty()) throw InvalidInput("scorer command is empty");
  if (max_concurrent_ < 1) throw InvalidInput("scorer concurrency must be >= 1");
}

CommandScorer::~CommandScorer() { delete gate_; }

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

fs::path unique_temp_png() {
  static std::atomic<std::uint64_t> counter{0};
  return fs::temp_directory_path() /
         ("styler-score-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".png");
}

}  // namespace

double CommandScorer::score(const Image& rendered) const {
  const fs::path png = unique_temp_png();
  write_png(rendered, png);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove(p, ec);
    }
  } cleanup{png};

  {
    std::unique_lock lock(gate_->mutex);
    gate_->cv.wait(lock, [&] { return gate_->active < max_concurrent_; });
    ++gate_->active;
  }
  std::string output;
  int status = -1;
  {
    struct Release {
      Gate* g;
      ~Release() {
        {
          std::lock_guard lock(g->mutex);
          --g->active;
        }
        g->cv.notify_one();
      }
    } release{gate_};
    const std::string cmd = command_ + " " + shell_quote(png.string());
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw IoError("cannot start scorer: " + command_);
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    status = ::pclose(pipe);
  }
  if (status != 0) throw Error("scorer exited with status " + std::to_string(status));
  std::istringstream is(output);
  std::string token;
  is >> token;
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size() || !std::isfinite(v)) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw FormatError("scorer printed '" + token + "' instead of a number");
  }
}

double score_style(const StylePipeline& style, std::span<const Image> images, const Scorer& scorer,
                   const ModelRegistry* models) {
  if (images.empty()) throw InvalidInput("scoring needs at least one image");
  double sum = 0.0;
  for (const auto& img : images) sum += scorer.score(execute(style, img, models));
  return sum / static_cast<double>(images.size());
}

std::vector<ScoredStyle> score_styles(std::span<const StylePipeline> styles, std::span<const Image> images,
                                      const Scorer& scorer, const ModelRegistry* models, int workers) {
  std::vector<ScoredStyle> out(styles.size());
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(1, styles.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < styles.size();) {
      out[i].style = styles[i];
      try {
        out[i].score = score_style(styles[i], images, scorer, models);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

void sort_by_score(std::vector<ScoredStyle>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const ScoredStyle& a, const ScoredStyle& b) {
    if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
    return a.score.has_value() && *a.score > *b.score;
  });
}

// ---------------------------------------------------------- contact sheet

namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string file_stem_for(std::size_t index, const std::string& name) {
  std::string safe;
  for (char c : name) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  if (safe.empty()) safe = "style";
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%04zu_", index);
  return prefix + safe;
}

}  // namespace

std::vector<ContactSheetEntry> contact_sheet(std::vector<ScoredStyle> entries, const Image& img,
                                             const fs::path& out_dir, const ContactSheetOptions& options,
                                             const ModelRegistry* models) {
  if (entries.empty()) throw InvalidInput("contact sheet needs at least one style");
  if (options.sorted) sort_by_score(entries);
  std::error_code ec;
  fs::create_directories(out_dir / "styles", ec);
  fs::create_directories(out_dir / "thumbs", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const Image small = fit_within(img, options.thumb_edge);
  std::vector<ContactSheetEntry> sheet;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    ContactSheetEntry row;
    row.score = e.score;
    row.error = e.error;
    const std::string stem = file_stem_for(i, e.style.name);
    try {
      row.style_file = "styles/" + stem + ".json";
      save_style(e.style, out_dir / row.style_file);
      const std::string thumb = "thumbs/" + stem + ".png";
      write_png(execute(e.style, small, models), out_dir / thumb);
      row.thumb_file = thumb;
    } catch (const std::exception& ex) {
      if (!row.error.empty()) row.error += "; ";
      row.error += ex.what();
    }
    sheet.push_back(std::move(row));
  }

  std::ofstream html(out_dir / "report.html");
  if (!html) throw IoError("cannot write " + (out_dir / "report.html").string());
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Style contact sheet</title>\n"
       << "<style>body{font-family:sans-serif;background:#222;color:#eee}"
       << ".grid{display:flex;flex-wrap:wrap;gap:12px}.cell{width:" << options.thumb_edge + 8
       << "px}.cell img{max-width:100%}.err{color:#f88}a{color:#9cf}</style></head><body>\n"
       << "<h1>Style contact sheet</h1>\n<div class=\"grid\">\n";
  for (std::size_t i = 0; i < sheet.size(); ++i) {
    const auto& row = sheet[i];
    html << "<div class=\"cell\">";
    if (!row.thumb_file.empty()) html << "<img src=\"" << html_escape(row.thumb_file) << "\" alt=\"\">";
    html << "<div><a href=\"" << html_escape(row.style_file) << "\">" << html_escape(entries[i].style.name)
         << "</a></div><div>score: ";
    if (row.score) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", *row.score);
      html << buf;
    } else {
      html << "unscored";
    }
    html << "</div>";
    if (!row.error.empty()) html << "<div class=\"err\">" << html_escape(row.error) << "</div>";
    html << "</div>\n";
  }
  html << "</div>\n</body></html>\n";
  if (!html) throw IoError("failed writing report.html");
  return sheet;
}

}  // namespace styler
