// Acceptance checks. Prints one PASS/FAIL line per criterion on stdout and
// the measurements behind it on stderr. Exit status is non-zero when any
// criterion fails. Pass criterion names as arguments to run a subset.

#include <Eigen/QR>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "styler/blade.hpp"
#include "styler/color.hpp"
#include "styler/effects.hpp"
#include "styler/metrics.hpp"
#include "styler/parallel.hpp"
#include "styler/pipeline.hpp"
#include "styler/pixel_ops.hpp"
#include "styler/png_io.hpp"
#include "styler/procedural.hpp"
#include "styler/reference_filters.hpp"
#include "styler/spatial_ops.hpp"
#include "styler/training.hpp"
#include "test_util.hpp"

using namespace styler;
namespace fs = std::filesystem;
using styler::testing::random_plane;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Collects the details behind one verdict.
struct Check {
  bool ok = true;
  std::ostringstream log;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    log << "    " << (cond ? "ok   " : "FAIL ") << what << "\n";
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

QuantizerSpec quantizer(int o, int s, int c) {
  QuantizerSpec q;
  q.orientation_bins = o;
  q.strength_bins = s;
  q.coherence_bins = c;
  for (int k = 1; k < s; ++k) q.strength_thresholds.push_back(0.02 * k);
  q.coherence_thresholds = QuantizerSpec::uniform_coherence_thresholds(c);
  return q;
}

BladeModel random_model(int side, const QuantizerSpec& q, std::uint64_t seed) {
  BladeModel m = BladeModel::identity(side, q);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index i = 0; i < m.filters.size(); ++i) m.filters.data()[i] = n(rng);
  return m;
}

std::vector<Image> load_luma(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const auto& f : files) out.emplace_back(luma(read_png(f)));
  return out;
}

// ------------------------------------------------------------------ fidelity

Check fidelity() {
  Check c;
  const fs::path photos = STYLER_PHOTOSET_DIR;
  std::vector<Image> train, test;
  try {
    train = load_luma(photos / "train");
    test = load_luma(photos / "test");
  } catch (const std::exception& e) {
    c.require(false, std::string("photo set readable: ") + e.what());
    return c;
  }
  c.require(train.size() >= 8, std::to_string(train.size()) + " training images");
  c.require(test.size() >= 4, std::to_string(test.size()) + " held-out images");
  if (!c.ok) return c;

  struct Case {
    std::string label;
    Effect effect;
    EffectParams params;
    double min_psnr;
  };
  const std::vector<Case> cases = {{"etf", Effect::etf, {}, 30.0},
                                   {"tvflow", Effect::tvflow, {}, 30.0},
                                   {"flowxdog", Effect::flowxdog, {}, 28.0},
                                   {"detail-20", Effect::detail, {{"delta", -20.0}}, 34.0},
                                   {"detail+20", Effect::detail, {{"delta", 20.0}}, 34.0}};
  const auto t0 = Clock::now();
  for (const auto& k : cases) {
    const EffectParams params = resolve_effect_params(k.effect, k.params);
    const auto tc = Clock::now();
    std::vector<Image> targets;
    for (const auto& img : train) targets.push_back(render_reference(k.effect, img, params));
    const BladeModel model = train_model(train, targets, default_training_config(k.effect));
    const double train_s = seconds_since(tc);
    double worst_psnr = 1e9, worst_ssim = 1e9, sum_psnr = 0.0;
    for (const auto& img : test) {
      const Image ref = render_reference(k.effect, img, params);
      const Image approx = infer(img, model);
      const double p = psnr(ref.plane(0), approx.plane(0)), s = mssim(ref.plane(0), approx.plane(0));
      worst_psnr = std::min(worst_psnr, p);
      worst_ssim = std::min(worst_ssim, s);
      sum_psnr += p;
    }
    const QuantizerSpec& q = model.quantizer;
    c.log << "    " << k.label << ": " << q.orientation_bins << "/" << q.strength_bins << "/" << q.coherence_bins
          << " @" << model.side << "x" << model.side << ", mean PSNR " << fmt("%.2f", sum_psnr / test.size())
          << " dB, train " << fmt("%.1f", train_s) << " s\n";
    c.require(worst_psnr >= k.min_psnr,
              k.label + " min PSNR " + fmt("%.2f", worst_psnr) + " dB >= " + fmt("%.0f", k.min_psnr));
    c.require(worst_ssim >= 0.93, k.label + " min MSSIM " + fmt("%.4f", worst_ssim) + " >= 0.93");
  }
  const double total = seconds_since(t0);
  c.require(total < 20 * 60, "train+eval " + fmt("%.0f", total) + " s < 1200 s");
  return c;
}

// ---------------------------------------------------------- inference oracle

Plane naive_inference(const Plane& z, const BladeModel& m) {
  const BucketMap b = select_buckets(Image(z), m.quantizer);
  const int r = m.side / 2;
  Plane out(z.rows(), z.cols());
  for (int y = 0; y < z.rows(); ++y)
    for (int x = 0; x < z.cols(); ++x) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          s += m.filters(b(y, x), (dy + r) * m.side + (dx + r)) * sample_clamped(z, x + dx, y + dy);
      out(y, x) = s;
    }
  return out;
}

Check inference_oracle() {
  Check c;
  double worst = 0.0;
  int trials = 0;
  for (int t = 0; t < 100; ++t) {
    const bool big = t % 2 == 1;
    const QuantizerSpec q = big ? quantizer(16, 5, 3) : quantizer(16, 1, 1);
    const int side = 3 + 2 * (t % 4);
    const BladeModel m = random_model(side, q, 1000 + t);
    const Plane z = random_plane(32, 32, 2000 + t, 0.0, 0.2);
    const Plane fast = infer(Image(z), m, 1).plane(0);
    const Plane slow = naive_inference(z, m);
    worst = std::max(worst, (fast - slow).abs().maxCoeff() / std::max(slow.abs().maxCoeff(), 1e-300));
    ++trials;
  }
  c.require(trials == 100, std::to_string(trials) + " trials over K = 16 and 240");
  c.require(worst <= 1e-12, "max relative error " + fmt("%.3g", worst) + " <= 1e-12");
  return c;
}

// ------------------------------------------------------------ K independence

Check k_independence() {
  Check c;
  const Image img(random_plane(2048, 2048, 7, 0.0, 1.0));
  const BladeModel small = random_model(7, quantizer(16, 1, 1), 1);
  const BladeModel large = random_model(7, quantizer(16, 4, 4), 2);
  (void)infer(img, small, 1);  // warm up
  std::vector<double> ts, tl;
  for (int i = 0; i < 9; ++i) {
    auto t0 = Clock::now();
    (void)infer(img, small, 1);
    ts.push_back(seconds_since(t0));
    t0 = Clock::now();
    (void)infer(img, large, 1);
    tl.push_back(seconds_since(t0));
  }
  const double a = median(ts), b = median(tl);
  const double diff = std::abs(a - b) / std::min(a, b);
  c.log << "    median K=16 " << fmt("%.3f", a) << " s, K=256 " << fmt("%.3f", b) << " s on 4.19 MP\n";
  c.require(diff < 0.10, "difference " + fmt("%.1f", 100 * diff) + "% < 10%");
  return c;
}

// ----------------------------------------------------------- training sanity

// Forward differences between horizontally and vertically adjacent taps.
Eigen::MatrixXd difference_operator(int side) {
  std::vector<std::pair<int, int>> pairs;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x + 1 < side; ++x) pairs.emplace_back(y * side + x, y * side + x + 1);
  for (int y = 0; y + 1 < side; ++y)
    for (int x = 0; x < side; ++x) pairs.emplace_back(y * side + x, (y + 1) * side + x);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), side * side);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    d(static_cast<Eigen::Index>(i), pairs[i].first) = -1.0;
    d(static_cast<Eigen::Index>(i), pairs[i].second) = 1.0;
  }
  return d;
}

Check training_sanity() {
  Check c;
  {
    std::vector<Image> inputs;
    for (int i = 0; i < 8; ++i) inputs.emplace_back(random_plane(96, 96, 50 + i));
    QuantizerSpec q = quantizer(8, 3, 3);
    q.strength_thresholds = strength_quantile_thresholds(inputs, q.rho, 3);
    BladeTrainer trainer(5, q);
    for (const auto& img : inputs) trainer.add_pair(img, img);
    SolveOptions opt;
    opt.lambda = 1e-8;
    SolveResult report;
    const BladeModel m = trainer.finish(opt, 1, &report);
    Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(25);
    delta[12] = 1.0;
    int solved = 0;
    double worst = 0.0;
    for (int k = 0; k < m.bucket_count(); ++k) {
      if (report.status[k] != BucketStatus::solved) continue;
      ++solved;
      worst = std::max(worst, (m.filters.row(k) - delta).cwiseAbs().maxCoeff());
    }
    c.require(solved >= m.bucket_count() / 3,
              std::to_string(solved) + " of " + std::to_string(m.bucket_count()) + " buckets populated");
    c.require(worst <= 1e-3, "identity task max tap error " + fmt("%.3g", worst) + " <= 1e-3");
  }
  {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> n;
    const int side = 3, taps = 9, buckets = 6;
    TrainingAccumulator acc(side, buckets);
    std::vector<Eigen::MatrixXd> a(buckets);
    std::vector<Eigen::VectorXd> b(buckets);
    for (int k = 0; k < buckets; ++k) {
      const int rows = 12 + 7 * k;
      a[k].resize(rows, taps);
      b[k].resize(rows);
      for (int i = 0; i < rows; ++i) {
        Eigen::Matrix<double, 1, Eigen::Dynamic> row(taps);
        for (int j = 0; j < taps; ++j) row[j] = n(rng);
        a[k].row(i) = row;
        b[k][i] = n(rng);
        acc.add(k, row.data(), b[k][i]);
      }
    }
    const Eigen::MatrixXd d = difference_operator(side);
    double worst = 0.0;
    for (double lambda : {0.0, 1e-3, 0.3}) {
      for (bool by_count : {false, true}) {
        SolveOptions opt;
        opt.lambda = lambda;
        opt.scale_by_count = by_count;
        const auto result = solve(acc, build_regularizer(side, side), opt);
        for (int k = 0; k < buckets; ++k) {
          const double w = by_count ? lambda * static_cast<double>(a[k].rows()) : lambda;
          Eigen::MatrixXd stacked(a[k].rows() + d.rows(), taps);
          stacked << a[k], std::sqrt(w) * d;
          Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
          rhs.head(a[k].rows()) = b[k];
          const Eigen::VectorXd h = stacked.colPivHouseholderQr().solve(rhs);
          worst = std::max(worst, (result.filters.row(k).transpose() - h).cwiseAbs().maxCoeff());
        }
      }
    }
    c.require(worst <= 1e-9, "solve vs dense least squares " + fmt("%.3g", worst) + " <= 1e-9");
  }
  return c;
}

// ------------------------------------------------------------ TV properties

Check tv_properties() {
  Check c;
  int increases = 0;
  double worst_excursion = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Plane u = random_plane(64, 64, 500 + seed);
    const double lo = u.minCoeff(), hi = u.maxCoeff();
    double tv = total_variation(u);
    for (int step = 0; step < 20; ++step) {
      u = tv_flow_step(u, 0.2, 1e-3);
      const double next = total_variation(u);
      if (next > tv * (1.0 + 1e-12)) ++increases;
      tv = next;
      worst_excursion = std::max({worst_excursion, lo - u.minCoeff(), u.maxCoeff() - hi});
    }
  }
  c.require(increases == 0, std::to_string(increases) + " TV increases over 50 images x 20 steps");
  c.require(worst_excursion <= 1e-6, "max principle excursion " + fmt("%.3g", worst_excursion) + " <= 1e-6");
  return c;
}

// ------------------------------------------------------------ throughput

Check throughput() {
  Check c;
  const BladeModel model = random_model(5, quantizer(16, 5, 3), 9);
  const std::vector<std::pair<std::string, std::function<void(const Image&)>>> ops = {
      {"gaussian_blur", [](const Image& i) { (void)gaussian_blur(i, 2.0); }},
      {"infer", [&](const Image& i) { (void)infer(i, model, 1); }},
      {"soft_threshold", [](const Image& i) { (void)soft_threshold(i, 0.03, 80.0); }}};
  const std::vector<int> edges = {1024, 2048, 4096};
  std::vector<Image> images;
  for (int edge : edges) images.emplace_back(random_plane(edge, edge, static_cast<std::uint64_t>(edge)));
  for (const auto& [name, op] : ops) {
    // Sizes are interleaved so slow drift in machine speed hits all of them
    // alike; one untimed call per size absorbs first-touch heap growth.
    std::vector<std::vector<double>> t(edges.size());
    for (const auto& img : images) op(img);
    for (int r = 0; r < 5; ++r) {
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto t0 = Clock::now();
        op(images[e]);
        t[e].push_back(seconds_since(t0));
      }
    }
    std::vector<double> rates;
    std::ostringstream line;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double mp = edges[e] * static_cast<double>(edges[e]) / 1e6;
      rates.push_back(mp / median(t[e]));
      line << " " << fmt("%.1f", mp) << " MP: " << fmt("%.2f", rates.back()) << " MP/s;";
    }
    const double lo = *std::min_element(rates.begin(), rates.end());
    const double hi = *std::max_element(rates.begin(), rates.end());
    c.require(hi / lo - 1.0 <= 0.25, name + line.str() + " spread " + fmt("%.1f", 100 * (hi / lo - 1.0)) + "% <= 25%");
  }
  return c;
}

// ------------------------------------------------------------ procedural

Check procedural() {
  Check c;
  const ProceduralRules r;
  int broken = 0;
  auto within = [](const Json& v, const double (&range)[2]) {
    return v.is_number() && v.get<double>() >= range[0] && v.get<double>() <= range[1];
  };
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const StylePipeline p = generate_style(seed);
    bool ok = p.background.size() >= 4 && p.background.size() <= 9 && validate(p).empty() && p == generate_style(seed);
    std::map<std::string, int> seen;
    for (const auto& b : p.background) {
      ++seen[b.kind];
      const auto& q = b.params;
      if (b.kind == "flow_xdog") ok &= within(q["sigma"], r.xdog_sigma) && within(q["p"], r.xdog_p);
      else if (b.kind == "soft_threshold") ok &= within(q["phi"], r.threshold_phi) && within(q["epsilon"], r.threshold_epsilon);
      else if (b.kind == "detail_control") ok &= within(q["delta"], r.detail_delta);
      else if (b.kind == "luma_posterize")
        ok &= q["levels"].is_number_integer() && q["levels"] >= r.posterize_levels[0] && q["levels"] <= r.posterize_levels[1];
      else if (b.kind == "saturation") ok &= within(q["s"], r.saturation);
      else if (b.kind == "scale") ok &= within(q["size"], r.size_percent);
      else ok &= b.kind == "tv_flow" || b.kind == "to_grayscale";
    }
    for (const auto& [kind, n] : seen) ok &= n == 1 || procedural_repeatable(kind);
    broken += !ok;
  }
  c.require(broken == 0, std::to_string(broken) + " of 1000 generated styles break the rules");
  int gray = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto bg = generate_style(seed).background;
    gray += std::any_of(bg.begin(), bg.end(), [](const BlockDescriptor& b) { return b.kind == "to_grayscale"; });
  }
  const double freq = gray / 10000.0;
  c.require(std::abs(freq - 0.2) <= 0.02, "grayscale frequency " + fmt("%.4f", freq) + " in 0.20 +- 0.02");
  return c;
}

// ------------------------------------------------------------ goldens

Check goldens() {
  Check c;
  const fs::path root = STYLER_SOURCE_DIR;
  const ModelRegistry models(root / "models");
  Image img;
  try {
    img = read_png(root / "data" / "test_image.png");
  } catch (const std::exception& e) {
    c.require(false, e.what());
    return c;
  }
  std::vector<fs::path> styles;
  for (const auto& e : fs::directory_iterator(root / "styles"))
    if (e.path().extension() == ".json") styles.push_back(e.path());
  std::sort(styles.begin(), styles.end());
  c.require(styles.size() == 6, std::to_string(styles.size()) + " shipped styles");
  const int saved = thread_count();
  for (const auto& s : styles) {
    std::ifstream in(root / "tests" / "goldens" / (s.stem().string() + ".png"), std::ios::binary);
    const std::string golden{std::istreambuf_iterator<char>(in), {}};
    bool same = !golden.empty();
    try {
      const StylePipeline style = load_style(s);
      for (int threads : {1, 2, 4, 0, 1}) {
        set_thread_count(threads);
        const auto png = encode_png(execute(style, img, &models));
        same &= std::string(png.begin(), png.end()) == golden;
      }
    } catch (const std::exception& e) {
      c.log << "    " << s.stem().string() << ": " << e.what() << "\n";
      same = false;
    }
    c.require(same, s.stem().string() + " byte-identical over 5 renders at 1, 2, 4, all, 1 threads");
  }
  set_thread_count(saved);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"fidelity", fidelity},         {"inference_oracle", inference_oracle}, {"k_independence", k_independence},
      {"training_sanity", training_sanity}, {"tv_properties", tv_properties},   {"throughput", throughput},
      {"procedural", procedural},     {"goldens", goldens}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = Clock::now();
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.require(false, std::string("threw: ") + e.what());
    }
    std::cerr << name << " (" << fmt("%.1f", seconds_since(t0)) << " s)\n" << c.log.str() << std::flush;
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << std::endl;
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
