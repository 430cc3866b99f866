#include "styler/cli.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "styler/collage.hpp"
#include "styler/color.hpp"
#include "styler/effects.hpp"
#include "styler/error.hpp"
#include "styler/metrics.hpp"
#include "styler/model_io.hpp"
#include "styler/parallel.hpp"
#include "styler/pipeline.hpp"
#include "styler/png_io.hpp"
#include "styler/procedural.hpp"
#include "styler/server.hpp"
#include "styler/training.hpp"

namespace styler {

namespace fs = std::filesystem;

namespace {

/// Raised for usage problems detected after argument parsing.
struct UsageError : Error {
  using Error::Error;
};

// A bad --effect value is a command-line mistake, not a validation failure.
Effect effect_flag(const std::string& name) {
  try {
    return parse_effect(name);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

fs::path resolve_model_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("STYLER_MODEL_DIR"); env && *env) return env;
  return "models";
}

std::vector<fs::path> pngs_in(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no PNG files in " + dir.string());
  return out;
}

EffectParams parse_params(const std::vector<std::string>& items) {
  EffectParams p;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      p[item.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw UsageError("--param value is not a number: '" + item + "'");
    }
  }
  return p;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw UsageError("seed range end precedes start: " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("--seeds expects A..B, got '" + s + "'");
  }
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec, int concurrency) {
  if (spec.empty() || spec == "builtin") return std::make_unique<HeuristicScorer>();
  return std::make_unique<CommandScorer>(spec, concurrency);
}

std::vector<Image> load_images(const std::vector<std::string>& paths) {
  std::vector<Image> out;
  for (const auto& p : paths) out.push_back(read_png(p));
  return out;
}

void print_scores(std::ostream& out, const std::vector<ScoredStyle>& scored, const std::vector<std::string>& files,
                  bool json) {
  if (json) {
    Json a = Json::array();
    for (std::size_t i = 0; i < scored.size(); ++i) {
      Json row = {{"name", scored[i].style.name}, {"file", files[i]}};
      row["score"] = scored[i].score ? Json(*scored[i].score) : Json(nullptr);
      if (!scored[i].error.empty()) row["error"] = scored[i].error;
      a.push_back(std::move(row));
    }
    out << a.dump(2) << "\n";
    return;
  }
  for (std::size_t i = 0; i < scored.size(); ++i) {
    out << std::left << std::setw(32) << scored[i].style.name << " ";
    if (scored[i].score)
      out << std::fixed << std::setprecision(4) << *scored[i].score;
    else
      out << "unscored (" << scored[i].error << ")";
    out << "\n";
  }
}

/// Blocks SIGINT/SIGTERM in every thread and stops the server when one
/// arrives.
int serve_until_signal(DesignServer& server, std::ostream& out, const std::string& host, int port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int bound = server.bind(host, port);
  if (bound < 0) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  out << "listening on http://" << host << ":" << bound << std::endl;
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  const bool ok = server.serve();
  // Wake the waiter if the server stopped on its own.
  if (waiter.joinable()) pthread_kill(waiter.native_handle(), SIGTERM);
  return ok ? kExitOk : kExitIo;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image stylization pipelines with learned fast filters", "styler"};
  app.require_subcommand(1);
  int threads = 0;
  std::string model_dir_flag;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--model-dir", model_dir_flag, "model directory (default $STYLER_MODEL_DIR or ./models)");

  // apply
  std::string style_path, in_path, out_path;
  auto* apply = app.add_subcommand("apply", "render a style file on an image");
  apply->add_option("--style", style_path, "style JSON")->required();
  apply->add_option("--in", in_path, "input PNG")->required();
  apply->add_option("--out", out_path, "output PNG")->required();

  // train
  std::string effect_name_arg, inputs_dir, model_out, model_name;
  int side = 0, obins = 0, sbins = 0, cbins = 0, passes = 1;
  double rho = 0.0, lambda = -1.0;
  std::vector<std::string> param_items;
  bool no_augment = false;
  auto* train = app.add_subcommand("train", "train a model approximating a reference effect");
  train->add_option("--effect", effect_name_arg, "etf, tvflow, flowxdog or detail")->required();
  train->add_option("--inputs", inputs_dir, "directory of training PNGs")->required();
  train->add_option("--out", model_out, "output model file")->required();
  train->add_option("--side", side, "filter footprint (odd, 3..11)");
  train->add_option("--obins", obins, "orientation bins");
  train->add_option("--sbins", sbins, "strength bins");
  train->add_option("--cbins", cbins, "coherence bins");
  train->add_option("--rho", rho, "structure tensor smoothing");
  train->add_option("--lambda", lambda, "regularization weight");
  train->add_option("--passes", passes, "inference passes stored in the model")->check(CLI::PositiveNumber);
  train->add_option("--param", param_items, "effect parameter key=value (repeatable)");
  train->add_option("--name", model_name, "model name stored in the sidecar");
  train->add_flag("--no-augment", no_augment, "disable the 8 dihedral variants");

  // infer
  std::string model_path;
  int infer_passes = -1;
  auto* inf = app.add_subcommand("infer", "apply a trained model to an image");
  inf->add_option("--model", model_path, "model file")->required();
  inf->add_option("--in", in_path, "input PNG")->required();
  inf->add_option("--out", out_path, "output PNG")->required();
  inf->add_option("--passes", infer_passes, "override the model's pass count")->check(CLI::PositiveNumber);

  // collage
  CollageLayout layout;
  auto* collage = app.add_subcommand("collage", "render a filter bank as a heatmap table");
  collage->add_option("--model", model_path, "model file")->required();
  collage->add_option("--out", out_path, "output PNG")->required();
  collage->add_option("--cell", layout.cell, "pixels per tap")->check(CLI::PositiveNumber);
  collage->add_option("--gap", layout.gap, "gutter between tiles")->check(CLI::NonNegativeNumber);

  // eval
  std::vector<std::string> eval_params;
  auto* eval = app.add_subcommand("eval", "compare a model with its reference effect");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--effect", effect_name_arg, "reference effect (default: from the model sidecar)");
  eval->add_option("--inputs", inputs_dir, "directory of held-out PNGs")->required();
  eval->add_option("--param", eval_params, "effect parameter key=value (default: from the sidecar)");

  // bench
  int repeats = 5;
  bool json_out = false;
  auto* bench = app.add_subcommand("bench", "time every block of a style");
  bench->add_option("--style", style_path, "style JSON")->required();
  bench->add_option("--in", in_path, "input PNG")->required();
  bench->add_option("--repeats", repeats, "repetitions (median is reported)")->check(CLI::PositiveNumber);
  bench->add_flag("--json", json_out, "machine-readable output");

  // gen
  std::string seeds = "0..9", out_dir, sheet_image, scorer_spec;
  bool sorted = false;
  int concurrency = 4;
  auto* gen = app.add_subcommand("gen", "generate random styles");
  gen->add_option("--seeds", seeds, "seed or inclusive range A..B");
  gen->add_option("--out-dir", out_dir, "directory for the style files")->required();
  gen->add_option("--sheet", sheet_image, "also render a scored contact sheet on this PNG");
  gen->add_option("--scorer", scorer_spec, "scorer command or 'builtin'");
  gen->add_flag("--sorted", sorted, "order the contact sheet by score");

  // score
  std::string style_dir, report_dir;
  std::vector<std::string> images;
  auto* score = app.add_subcommand("score", "score style files");
  score->add_option("--dir", style_dir, "directory of style JSON files")->required();
  score->add_option("--scorer", scorer_spec, "command receiving a PNG path and printing a float, or 'builtin'");
  score->add_option("--image", images, "PNG to render on (repeatable)")->required();
  score->add_option("--concurrency", concurrency, "concurrent scorer commands")->check(CLI::PositiveNumber);
  score->add_flag("--json", json_out, "machine-readable output");
  score->add_flag("--sorted", sorted, "highest score first");
  score->add_option("--report", report_dir, "write a contact sheet here");

  // serve
  std::string host = "127.0.0.1", image_dir, serve_style_dir, preset_dir = "styles";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the style editor back end");
  serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "bind address");
  serve->add_option("--image-dir", image_dir, "directory of source PNGs")->required();
  serve->add_option("--style-dir", serve_style_dir, "saved styles (default: <image-dir>/../user_styles)");
  serve->add_option("--preset-dir", preset_dir, "shipped styles");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'styler --help' for usage\n";
    return kExitUsage;
  }

  try {
    set_thread_count(threads);
    const fs::path model_dir = resolve_model_dir(model_dir_flag);
    ModelRegistry models(model_dir);

    if (*apply) {
      const auto style = load_style(style_path);
      const Image img = read_png(in_path);
      const auto diags = validate(style, img.channels(), &models);
      if (!diags.empty()) {
        err << format_diagnostics(diags);
        return kExitValidation;
      }
      write_png(execute(style, img, &models), out_path);
      return kExitOk;
    }

    if (*train) {
      const Effect effect = effect_flag(effect_name_arg);
      const EffectParams params = resolve_effect_params(effect, parse_params(param_items));
      TrainingConfig config = default_training_config(effect);
      if (side) config.side = side;
      auto& q = config.quantizer;
      if (obins) q.orientation_bins = obins;
      if (sbins) q.strength_bins = sbins;
      if (cbins) {
        q.coherence_bins = cbins;
        q.coherence_thresholds = QuantizerSpec::uniform_coherence_thresholds(cbins);
      }
      if (rho > 0.0) q.rho = rho;
      if (lambda >= 0.0) config.solve.lambda = lambda;
      config.passes = passes;
      config.augmentation = no_augment ? Augmentation::none : Augmentation::dihedral;

      std::vector<Image> inputs, targets;
      for (const auto& p : pngs_in(inputs_dir)) {
        inputs.emplace_back(luma(read_png(p)));
        targets.push_back(render_reference(effect, inputs.back(), params));
      }
      BladeModel model = train_model(inputs, targets, config);
      model.info.name = model_name.empty() ? fs::path(model_out).stem().string() : model_name;
      model.info.effect = std::string(styler::effect_name(effect));
      model.info.params = params;
      save_model(model, model_out);
      out << "trained " << model.bucket_count() << " filters of " << model.side << "x" << model.side << " on "
          << inputs.size() << " images -> " << model_out << "\n";
      return kExitOk;
    }

    if (*inf) {
      const BladeModel model = load_model(model_path);
      const Image img = read_png(in_path);
      write_png(infer_luma(img, model, infer_passes), out_path);
      return kExitOk;
    }

    if (*collage) {
      write_png(render_collage(load_model(model_path), layout), out_path);
      return kExitOk;
    }

    if (*eval) {
      const BladeModel model = load_model(model_path);
      const std::string name = effect_name_arg.empty() ? model.info.effect : effect_name_arg;
      if (name.empty()) throw UsageError("model has no recorded effect; pass --effect");
      const Effect effect = effect_flag(name);
      EffectParams params = eval_params.empty() ? model.info.params : parse_params(eval_params);
      params = resolve_effect_params(effect, params);
      Json rows = Json::array();
      double sum_psnr = 0.0, sum_ssim = 0.0;
      const auto files = pngs_in(inputs_dir);
      for (const auto& p : files) {
        const Image y(luma(read_png(p)));
        const Image ref = render_reference(effect, y, params);
        const Image approx = infer(y, model);
        const double a = psnr(ref.plane(0), approx.plane(0)), b = mssim(ref.plane(0), approx.plane(0));
        sum_psnr += a;
        sum_ssim += b;
        out << p.filename().string() << "  PSNR " << std::fixed << std::setprecision(2) << a << " dB  MSSIM "
            << std::setprecision(4) << b << "\n";
      }
      out << "mean  PSNR " << std::fixed << std::setprecision(2) << sum_psnr / files.size() << " dB  MSSIM "
          << std::setprecision(4) << sum_ssim / files.size() << "\n";
      return kExitOk;
    }

    if (*bench) {
      const auto style = load_style(style_path);
      const Image img = read_png(in_path);
      const auto report = benchmark(style, img, repeats, &models);
      if (json_out) {
        out << benchmark_to_json(report).dump(2) << "\n";
      } else {
        out << std::fixed << std::setprecision(3) << report.megapixels << " MP, " << repeats << " repeats\n";
        for (const auto& r : report.rows) {
          out << std::left << std::setw(12) << r.layer << std::setw(4) << (r.index >= 0 ? std::to_string(r.index) : "")
              << std::setw(20) << r.kind << std::right << std::setw(10) << std::setprecision(4) << r.seconds * 1e3
              << " ms " << std::setw(10) << std::setprecision(2) << r.megapixels_per_second << " MP/s\n";
        }
        out << std::left << std::setw(36) << "total" << std::right << std::setw(10) << std::setprecision(4)
            << report.total_seconds * 1e3 << " ms " << std::setw(10) << std::setprecision(2)
            << report.total_megapixels_per_second << " MP/s\n";
      }
      return kExitOk;
    }

    if (*gen) {
      const auto [a, b] = parse_seed_range(seeds);
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      std::vector<StylePipeline> styles;
      for (std::uint64_t s = a;; ++s) {
        styles.push_back(generate_style(s));
        save_style(styles.back(), fs::path(out_dir) / (styles.back().name + ".json"));
        if (s == b) break;
      }
      out << "wrote " << styles.size() << " styles to " << out_dir << "\n";
      if (!sheet_image.empty()) {
        const std::vector<Image> imgs{read_png(sheet_image)};
        const auto scorer = make_scorer(scorer_spec, concurrency);
        auto scored = score_styles(styles, imgs, *scorer, &models);
        const fs::path sheet_dir = fs::path(out_dir) / "sheet";
        contact_sheet(std::move(scored), imgs.front(), sheet_dir, {sorted, 256}, &models);
        out << "contact sheet: " << (sheet_dir / "report.html").string() << "\n";
      }
      return kExitOk;
    }

    if (*score) {
      std::vector<StylePipeline> styles;
      std::vector<std::string> files;
      std::error_code ec;
      if (!fs::is_directory(style_dir, ec)) throw IoError("not a directory: " + style_dir);
      std::vector<fs::path> paths;
      for (const auto& e : fs::directory_iterator(style_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") paths.push_back(e.path());
      std::sort(paths.begin(), paths.end());
      for (const auto& p : paths) {
        styles.push_back(load_style(p));
        if (styles.back().name.empty()) styles.back().name = p.stem().string();
        files.push_back(p.filename().string());
      }
      if (styles.empty()) throw IoError("no style files in " + style_dir);
      const auto imgs = load_images(images);
      const auto scorer = make_scorer(scorer_spec, concurrency);
      auto scored = score_styles(styles, imgs, *scorer, &models, concurrency);
      if (sorted) {
        std::vector<std::size_t> order(scored.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
          const auto& l = scored[x].score;
          const auto& r = scored[y].score;
          if (l.has_value() != r.has_value()) return l.has_value();
          return l.has_value() && *l > *r;
        });
        std::vector<ScoredStyle> s2;
        std::vector<std::string> f2;
        for (auto i : order) {
          s2.push_back(scored[i]);
          f2.push_back(files[i]);
        }
        scored = std::move(s2);
        files = std::move(f2);
      }
      print_scores(out, scored, files, json_out);
      if (!report_dir.empty()) contact_sheet(scored, imgs.front(), report_dir, {sorted, 256}, &models);
      const bool any_failed = std::any_of(scored.begin(), scored.end(), [](const auto& s) { return !s.score; });
      return any_failed ? kExitNumeric : kExitOk;
    }

    if (*serve) {
      ServerConfig config;
      config.image_dir = image_dir;
      config.style_dir = serve_style_dir.empty() ? fs::path(image_dir).parent_path() / "user_styles"
                                                 : fs::path(serve_style_dir);
      config.preset_dir = preset_dir;
      config.model_dir = model_dir;
      DesignServer server(config);
      return serve_until_signal(server, out, host, port);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CorruptState& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace styler
