#include "styler/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "styler/color.hpp"
#include "styler/error.hpp"
#include "styler/model_io.hpp"
#include "styler/pixel_ops.hpp"
#include "styler/reference_filters.hpp"
#include "styler/resample.hpp"
#include "styler/spatial_ops.hpp"

namespace styler {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- models

void ModelRegistry::add(const std::string& name, BladeModel model) {
  model.validate();
  std::lock_guard lock(mutex_);
  cache_[name] = std::make_shared<const BladeModel>(std::move(model));
}

std::shared_ptr<const BladeModel> ModelRegistry::find(const std::string& name) const {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  if (dir_.empty() || name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos)
    return nullptr;
  const fs::path path = dir_ / (name + ".bld");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return nullptr;
  auto model = std::make_shared<const BladeModel>(load_model(path));
  cache_[name] = model;
  return model;
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [k, v] : cache_) out.push_back(k);
  }
  std::error_code ec;
  if (!dir_.empty() && fs::is_directory(dir_, ec)) {
    for (const auto& e : fs::directory_iterator(dir_, ec))
      if (e.path().extension() == ".bld") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// -------------------------------------------------------------- registry

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ParamSpec number(std::string name, double lo, double hi, double def, std::string help, double ui_max = -1.0,
                 bool lo_exclusive = false, bool required = false) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::number;
  p.min = lo;
  p.max = hi;
  p.min_exclusive = lo_exclusive;
  p.required = required;
  p.default_value = def;
  p.ui_max = ui_max > 0.0 ? ui_max : hi;
  p.help = std::move(help);
  return p;
}

ParamSpec integer(std::string name, int lo, int hi, int def, std::string help, bool required = false) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::integer;
  p.min = lo;
  p.max = hi;
  p.required = required;
  p.default_value = def;
  p.ui_max = hi;
  p.help = std::move(help);
  return p;
}

ParamSpec choice(std::string name, std::vector<std::string> choices, std::string def, std::string help) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::choice;
  p.choices = std::move(choices);
  p.default_value = std::move(def);
  p.help = std::move(help);
  return p;
}

ParamSpec text(std::string name, std::string help) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::text;
  p.default_value = "";
  p.help = std::move(help);
  return p;
}

ParamSpec color(std::string name, double lo, double hi, std::string help) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::color;
  p.min = lo;
  p.max = hi;
  p.default_value = Json::array({0.0, 0.0, 0.0});
  p.ui_max = hi;
  p.help = std::move(help);
  return p;
}

std::string any_input(const ChannelState&) { return {}; }
ChannelState same(const ChannelState& s, const Json&) { return s; }

std::string needs_color(const ChannelState& s) {
  return s.channels == 3 ? std::string{} : std::string("needs a 3-channel image; add To Color after To Grayscale");
}

ChannelState gray_output(const ChannelState& s, const Json&) { return {1, s.channels == 1 && s.stash}; }

double num(const Json& params, const char* key) { return params.at(key).get<double>(); }
int inum(const Json& params, const char* key) { return static_cast<int>(std::lround(params.at(key).get<double>())); }

/// Runs `fn` on the luma and reattaches chroma; the new luma is clipped.
template <typename Fn>
Image on_luma(const Image& img, Fn&& fn) {
  const Image y(luma(img));
  Plane out = fn(y).plane(0);
  return with_luma(img, clip01(out));
}

std::string model_param_help() {
  return "name of a trained model; empty runs the reference implementation";
}

Image blade_or(const Image& img, const BlockContext& ctx, const std::function<Image(const Image&)>& reference) {
  if (ctx.model) return on_luma(img, [&](const Image& y) { return infer(y, *ctx.model); });
  return on_luma(img, reference);
}

std::vector<BlockSpec> make_registry() {
  std::vector<BlockSpec> r;
  auto add = [&](BlockSpec b) {
    if (!b.check_input) b.check_input = any_input;
    if (!b.output) b.output = same;
    r.push_back(std::move(b));
  };

  add({"to_grayscale", "To Grayscale", "Keeps the luma and stashes the chroma for a later To Color.", {}, nullptr,
       [](const ChannelState&, const Json&) { return ChannelState{1, true}; }, nullptr,
       [](const Image& img, const BlockContext&) {
         if (img.channels() == 3) return rgb_to_luma_chroma(img);
         Image out(clip01(img.plane(0)));
         if (img.has_chroma()) {
           out.set_chroma(img.chroma());
         } else {
           const Plane zero = Plane::Zero(img.height(), img.width());
           out.set_chroma({zero, zero});
         }
         return out;
       }});

  add({"to_color", "To Color", "Rebuilds RGB from the luma and the stashed chroma.", {},
       [](const ChannelState& s) {
         return s.channels == 1 && s.stash ? std::string{}
                                           : std::string("needs chroma stashed by an earlier To Grayscale");
       },
       [](const ChannelState&, const Json&) { return ChannelState{3, false}; }, nullptr,
       [](const Image& img, const BlockContext&) { return luma_chroma_to_rgb(img); }});

  add({"posterize", "Posterize", "Quantizes every channel to a number of levels.",
       {integer("levels", 2, 256, 4, "quantization levels per channel", true)}, nullptr, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) { return posterize(img, inum(c.params, "levels")); }});

  add({"luma_posterize", "Luma Posterize", "Quantizes the luma only.",
       {integer("levels", 2, 256, 8, "quantization levels", true)}, nullptr, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) { return luma_posterize(img, inum(c.params, "levels")); }});

  add({"brightness", "Brightness", "Scales the luma.",
       {number("factor", 0.0, kInf, 1.0, "luma gain", 4.0, false, true)}, nullptr, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) { return brightness(img, num(c.params, "factor")); }});

  add({"soft_threshold", "Soft Threshold", "Smoothly maps dark values to black, keeps the rest white.",
       {number("phi", 0.0, kInf, 0.03, "slope per 8-bit level", 0.2, true, true),
        number("epsilon", 0.0, 255.0, 80.0, "cutoff in 8-bit levels", -1.0, false, true)},
       nullptr, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) {
         return soft_threshold(img, num(c.params, "phi"), num(c.params, "epsilon"));
       }});

  add({"saturation", "Saturation", "Pushes colors away from (or toward) gray.",
       {number("s", 0.0, kInf, 1.5, "saturation factor", 4.0, false, true)}, needs_color, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) { return saturate(img, num(c.params, "s")); }});

  add({"hue", "Hue", "Rotates the chroma and adds a color bias.",
       {number("angle", -2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 0.0, "rotation in radians"),
        color("bias", -1.0, 1.0, "RGB offset")},
       needs_color, nullptr, nullptr,
       [](const Image& img, const BlockContext& c) {
         return hue(img, num(c.params, "angle"), c.params.at("bias").get<std::array<double, 3>>());
       }});

  add({"colorize", "Colorize", "Monochrome tint with a fixed hue and saturation.",
       {number("hue", 0.0, 360.0, 30.0, "hue in degrees"), number("saturation", 0.0, 1.0, 0.5, "HSL saturation"),
        number("lum_scale", 0.0, kInf, 1.0, "lightness gain", 2.0)},
       nullptr, [](const ChannelState&, const Json&) { return ChannelState{3, false}; }, nullptr,
       [](const Image& img, const BlockContext& c) {
         return colorize(img, num(c.params, "hue"), num(c.params, "saturation"), num(c.params, "lum_scale"));
       }});

  add({"gaussian", "Gaussian Blur", "Separable Gaussian blur of every channel.",
       {number("sigma", 0.0, kInf, 1.0, "standard deviation in pixels", 20.0, false, true)}, nullptr, nullptr,
       nullptr, [](const Image& img, const BlockContext& c) { return gaussian_blur(img, num(c.params, "sigma")); }});

  add({"sobel", "Sobel", "Gradient magnitude of the luma.", {}, nullptr, gray_output, nullptr,
       [](const Image& img, const BlockContext&) { return sobel(img); }});

  add({"scale", "Size", "Resamples the working image; the layer is resized back at the end.",
       {number("size", 0.0, 1000.0, 100.0, "percent of the current size", 400.0, true, true)}, nullptr, nullptr,
       nullptr, [](const Image& img, const BlockContext& c) { return resample(img, num(c.params, "size") / 100.0); }});

  add({"pattern_fill", "Pattern Fill", "Replaces luma levels with tiled textures.",
       {text("textures", "directory of PNG tiles, darkest first; empty uses the built-in hatching"),
        integer("tile", 2, 64, 8, "built-in tile size"), integer("levels", 2, 16, 5, "built-in texture count")},
       nullptr, gray_output, nullptr,
       [](const Image& img, const BlockContext& c) {
         const auto dir = c.params.at("textures").get<std::string>();
         if (!dir.empty()) {
           std::error_code ec;
           if (!fs::is_directory(dir, ec)) throw ConfigError("texture directory not found: " + dir);
           return pattern_fill(img, load_textures(dir));
         }
         return pattern_fill(img, default_hatch_textures(inum(c.params, "tile"), inum(c.params, "levels")));
       }});

  add({"halftone", "Halftone", "Clustered-dot screen, gray or CMYK.",
       {integer("cell", 2, 64, 6, "cell size in pixels"), choice("mode", {"gray", "cmyk"}, "gray", "screen mode")},
       nullptr,
       [](const ChannelState&, const Json& p) {
         return ChannelState{p.at("mode").get<std::string>() == "cmyk" ? 3 : 1, false};
       },
       nullptr,
       [](const Image& img, const BlockContext& c) {
         return halftone(img, inum(c.params, "cell"), parse_halftone_mode(c.params.at("mode").get<std::string>()));
       }});

  BlockSpec etf{"etf", "Edge Tangent Flow", "Smooths along edges.",
                {text("model", model_param_help()), number("rho", 0.0, kInf, 2.0, "tensor smoothing", 10.0, true),
                 number("length", 0.0, kInf, 4.0, "streamline half length", 20.0),
                 integer("passes", 1, 10, 1, "repetitions")},
                nullptr, nullptr, nullptr,
                [](const Image& img, const BlockContext& c) {
                  return blade_or(img, c, [&](const Image& y) {
                    return etf_smooth(y, {num(c.params, "rho"), num(c.params, "length"), inum(c.params, "passes")});
                  });
                },
                true};
  add(std::move(etf));

  BlockSpec tvf{"tv_flow", "TV Flow", "Total-variation flow; flattens regions, keeps edges.",
                {text("model", model_param_help()), integer("steps", 0, 1000, 10, "explicit steps"),
                 number("dt", 0.0, kTvFlowMaxStep, 0.2, "time step", -1.0, true),
                 number("epsilon", 0.0, 1.0, 1e-3, "gradient floor", 0.05, true)},
                nullptr, nullptr, nullptr,
                [](const Image& img, const BlockContext& c) {
                  return blade_or(img, c, [&](const Image& y) {
                    return tv_flow(y, {inum(c.params, "steps"), num(c.params, "dt"), num(c.params, "epsilon")});
                  });
                },
                true};
  add(std::move(tvf));

  BlockSpec xdog{"flow_xdog", "Flow XDoG", "Flow-guided difference of Gaussians; optional soft threshold.",
                 {text("model", model_param_help()),
                  number("sigma", 0.0, kInf, 1.0, "inner Gaussian scale", 10.0, true),
                  number("p", 0.0, kInf, 5.0, "edge emphasis", 50.0),
                  number("rho", 0.0, kInf, 2.0, "tensor smoothing", 10.0, true),
                  number("lic_length", 0.0, kInf, 3.0, "smoothing along the flow", 20.0),
                  number("phi", 0.0, kInf, 0.0, "threshold slope per 8-bit level; 0 keeps the raw response", 0.2),
                  number("epsilon", 0.0, 255.0, 128.0, "threshold cutoff in 8-bit levels")},
                 nullptr, nullptr, nullptr,
                 [](const Image& img, const BlockContext& c) {
                   Image r = blade_or(img, c, [&](const Image& y) {
                     return flow_xdog_response(y, {num(c.params, "sigma"), num(c.params, "p"), num(c.params, "rho"),
                                                   num(c.params, "lic_length")});
                   });
                   const double phi = num(c.params, "phi");
                   if (phi > 0.0) r = soft_threshold(r, phi, num(c.params, "epsilon"));
                   return r;
                 },
                 true};
  add(std::move(xdog));

  BlockSpec detail{"detail_control", "Detail Control", "Boosts or removes fine detail.",
                   {text("model", model_param_help()),
                    number("delta", -100.0, 100.0, -20.0, "detail change in percent"),
                    number("sigma", 0.0, kInf, 3.0, "base layer scale", 10.0, true)},
                   nullptr, nullptr, nullptr,
                   [](const Image& img, const BlockContext& c) {
                     return blade_or(img, c, [&](const Image& y) {
                       return detail_control(y, num(c.params, "delta"), num(c.params, "sigma"), false);
                     });
                   },
                   true};
  add(std::move(detail));

  add({"linear_equalize", "Linear Equalization", "Stretches the luma between two percentiles.",
       {number("low", 0.0, 100.0, 5.0, "low percentile"), number("high", 0.0, 100.0, 95.0, "high percentile")},
       nullptr, nullptr,
       [](const Json& p) {
         return num(p, "low") < num(p, "high") ? std::string{} : std::string("low must be below high");
       },
       [](const Image& img, const BlockContext& c) {
         return linear_equalize(img, num(c.params, "low"), num(c.params, "high"));
       }});

  add({"min_dynamic_range", "Minimum Dynamic Range", "Expands a narrow luma range about its midpoint.",
       {number("range", 0.0, 255.0, 128.0, "target 5-95 percentile span in 8-bit levels", -1.0, true)}, nullptr,
       nullptr, nullptr,
       [](const Image& img, const BlockContext& c) { return min_dynamic_range(img, num(c.params, "range")); }});

  return r;
}

Json bound_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string type_name(ParamType t) {
  switch (t) {
    case ParamType::number: return "number";
    case ParamType::integer: return "integer";
    case ParamType::choice: return "choice";
    case ParamType::color: return "color";
    case ParamType::text: return "text";
  }
  return "unknown";
}

}  // namespace

const std::vector<BlockSpec>& block_registry() {
  static const std::vector<BlockSpec> registry = make_registry();
  return registry;
}

const BlockSpec* find_block(const std::string& kind) {
  for (const auto& b : block_registry())
    if (b.kind == kind) return &b;
  return nullptr;
}

Json registry_to_json() {
  Json blocks = Json::array();
  for (const auto& b : block_registry()) {
    Json params = Json::array();
    for (const auto& p : b.params) {
      Json j = {{"name", p.name},
                {"type", type_name(p.type)},
                {"required", p.required},
                {"default", p.default_value},
                {"help", p.help}};
      if (p.type == ParamType::number || p.type == ParamType::integer || p.type == ParamType::color) {
        j["min"] = bound_json(p.min);
        j["max"] = bound_json(p.max);
        j["min_exclusive"] = p.min_exclusive;
        j["ui_max"] = p.ui_max;
      }
      if (p.type == ParamType::choice) j["choices"] = p.choices;
      params.push_back(std::move(j));
    }
    blocks.push_back({{"kind", b.kind},
                      {"label", b.label},
                      {"description", b.description},
                      {"uses_model", b.uses_model},
                      {"params", std::move(params)}});
  }
  return blocks;
}

// ------------------------------------------------------------ style file

std::string composite_mode_name(CompositeMode m) {
  switch (m) {
    case CompositeMode::multiply: return "multiply";
    case CompositeMode::foreground_only: return "foreground-only";
    case CompositeMode::background_only: return "background-only";
  }
  return "multiply";
}

namespace {

CompositeMode parse_composite_mode(const std::string& s) {
  if (s == "multiply") return CompositeMode::multiply;
  if (s == "foreground-only") return CompositeMode::foreground_only;
  if (s == "background-only") return CompositeMode::background_only;
  throw FormatError("unknown composite_mode '" + s + "'");
}

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw FormatError("unknown key '" + k + "' in " + where);
  }
}

BlockDescriptor block_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be an object");
  reject_unknown_keys(j, {"kind", "params", "enabled"}, where);
  BlockDescriptor b;
  if (!j.contains("kind") || !j["kind"].is_string()) throw FormatError(where + ".kind must be a string");
  b.kind = j["kind"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw FormatError(where + ".params must be an object");
    b.params = j["params"];
  }
  if (j.contains("enabled")) {
    if (!j["enabled"].is_boolean()) throw FormatError(where + ".enabled must be a boolean");
    b.enabled = j["enabled"].get<bool>();
  }
  return b;
}

std::vector<BlockDescriptor> layer_from_json(const Json& j, const std::string& layer) {
  if (!j.is_array()) throw FormatError(layer + " must be an array");
  std::vector<BlockDescriptor> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(block_from_json(j[i], layer + "[" + std::to_string(i) + "]"));
  return out;
}

Json layer_to_json(const std::vector<BlockDescriptor>& blocks) {
  Json a = Json::array();
  for (const auto& b : blocks) a.push_back({{"kind", b.kind}, {"params", b.params}, {"enabled", b.enabled}});
  return a;
}

}  // namespace

StylePipeline style_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("style must be a JSON object");
  reject_unknown_keys(j, {"version", "name", "composite_mode", "line_color", "background", "foreground"}, "style");
  if (!j.contains("version") || !j["version"].is_string() || j["version"].get<std::string>() != kStyleVersion)
    throw FormatError(std::string("style version must be \"") + kStyleVersion + "\"");
  StylePipeline p;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw FormatError("name must be a string");
    p.name = j["name"].get<std::string>();
  }
  if (j.contains("composite_mode")) {
    if (!j["composite_mode"].is_string()) throw FormatError("composite_mode must be a string");
    p.composite_mode = parse_composite_mode(j["composite_mode"].get<std::string>());
  }
  if (j.contains("line_color")) {
    const Json& c = j["line_color"];
    if (!c.is_array() || c.size() != 3 || !std::all_of(c.begin(), c.end(), [](const Json& v) { return v.is_number(); }))
      throw FormatError("line_color must be an array of three numbers");
    for (int i = 0; i < 3; ++i) p.line_color[i] = c[i].get<double>();
  }
  if (j.contains("background")) p.background = layer_from_json(j["background"], "background");
  if (j.contains("foreground")) p.foreground = layer_from_json(j["foreground"], "foreground");
  return p;
}

Json style_to_json(const StylePipeline& p) {
  return {{"version", kStyleVersion},
          {"name", p.name},
          {"composite_mode", composite_mode_name(p.composite_mode)},
          {"line_color", p.line_color},
          {"background", layer_to_json(p.background)},
          {"foreground", layer_to_json(p.foreground)}};
}

StylePipeline load_style(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open style file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  auto p = style_from_json(j);
  return p;
}

void save_style(const StylePipeline& p, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write style file " + path.string());
  out << style_to_json(p).dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

// ------------------------------------------------------------ validation

Json diagnostics_to_json(const std::vector<Diagnostic>& d) {
  Json a = Json::array();
  for (const auto& x : d)
    a.push_back({{"layer", x.layer},
                 {"index", x.index},
                 {"kind", x.kind},
                 {"param", x.param},
                 {"code", x.code},
                 {"message", x.message}});
  return a;
}

std::string format_diagnostics(const std::vector<Diagnostic>& d) {
  std::ostringstream os;
  for (const auto& x : d) {
    if (!x.layer.empty()) os << x.layer << "[" << x.index << "] " << x.kind;
    if (!x.param.empty()) os << (x.layer.empty() ? "" : ".") << x.param;
    os << ": " << x.message << " (" << x.code << ")\n";
  }
  return os.str();
}

namespace {

std::string check_value(const ParamSpec& spec, const Json& v, bool& type_ok) {
  type_ok = true;
  auto in_range = [&](double x) {
    const bool lo = spec.min_exclusive ? x > spec.min : x >= spec.min;
    return std::isfinite(x) && lo && x <= spec.max;
  };
  auto range_text = [&] {
    std::ostringstream os;
    os << (spec.min_exclusive ? "(" : "[") << spec.min << ", " << spec.max << "]";
    return os.str();
  };
  switch (spec.type) {
    case ParamType::number:
    case ParamType::integer: {
      if (!v.is_number()) {
        type_ok = false;
        return "expected a number";
      }
      const double x = v.get<double>();
      if (spec.type == ParamType::integer && x != std::floor(x)) {
        type_ok = false;
        return "expected an integer";
      }
      if (!in_range(x)) return "value out of range " + range_text();
      return {};
    }
    case ParamType::choice: {
      if (!v.is_string()) {
        type_ok = false;
        return "expected a string";
      }
      const auto s = v.get<std::string>();
      if (std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end())
        return "unknown choice '" + s + "'";
      return {};
    }
    case ParamType::color: {
      if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); })) {
        type_ok = false;
        return "expected three numbers";
      }
      for (const auto& e : v)
        if (!in_range(e.get<double>())) return "component out of range " + range_text();
      return {};
    }
    case ParamType::text:
      if (!v.is_string()) {
        type_ok = false;
        return "expected a string";
      }
      return {};
  }
  return {};
}

void validate_layer(const std::vector<BlockDescriptor>& blocks, const std::string& layer, int input_channels,
                    const ModelRegistry* models, std::vector<Diagnostic>& out) {
  ChannelState state{input_channels, false};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (!b.enabled) continue;
    const int idx = static_cast<int>(i);
    auto diag = [&](std::string param, std::string code, std::string msg) {
      out.push_back({layer, idx, b.kind, std::move(param), std::move(code), std::move(msg)});
    };
    const BlockSpec* spec = find_block(b.kind);
    if (!spec) {
      diag("", "unknown_block", "unknown block '" + b.kind + "'");
      continue;  // later blocks are checked as if this one were absent
    }
    bool params_ok = true;
    for (const auto& [k, v] : b.params.items()) {
      if (std::none_of(spec->params.begin(), spec->params.end(), [&](const ParamSpec& p) { return p.name == k; })) {
        diag(k, "unknown_param", "unknown parameter '" + k + "'");
        params_ok = false;
      }
    }
    for (const auto& p : spec->params) {
      if (!b.params.contains(p.name)) {
        if (p.required) {
          diag(p.name, "missing_param", "missing required parameter");
          params_ok = false;
        }
        continue;
      }
      bool type_ok = true;
      const auto msg = check_value(p, b.params[p.name], type_ok);
      if (!msg.empty()) {
        diag(p.name, type_ok ? "out_of_range" : "type", msg);
        params_ok = false;
      }
    }
    Json resolved;
    if (params_ok) {
      resolved = resolve_params(*spec, b.params);
      if (spec->check_params) {
        const auto msg = spec->check_params(resolved);
        if (!msg.empty()) {
          diag("", "out_of_range", msg);
          params_ok = false;
        }
      }
    }
    if (params_ok && spec->uses_model && models) {
      const auto name = resolved.at("model").get<std::string>();
      if (!name.empty()) {
        try {
          if (!models->find(name)) diag("model", "model", "unknown model '" + name + "'");
        } catch (const Error& e) {
          diag("model", "model", std::string("model '") + name + "' cannot be loaded: " + e.what());
        }
      }
    }
    const auto channel_msg = spec->check_input(state);
    if (!channel_msg.empty()) diag("", "channel", spec->label + " " + channel_msg);
    if (params_ok) state = spec->output(state, resolved);
  }
}

}  // namespace

Json resolve_params(const BlockSpec& spec, const Json& params) {
  Json r = Json::object();
  for (const auto& p : spec.params) r[p.name] = params.contains(p.name) ? params[p.name] : p.default_value;
  return r;
}

std::vector<Diagnostic> validate(const StylePipeline& p, int input_channels, const ModelRegistry* models) {
  std::vector<Diagnostic> out;
  for (double c : p.line_color)
    if (!(c >= 0.0 && c <= 1.0)) {
      out.push_back({"", -1, "", "line_color", "out_of_range", "line_color components must lie in [0, 1]"});
      break;
    }
  if (input_channels != 1 && input_channels != 3)
    out.push_back({"", -1, "", "", "channel", "input images must have 1 or 3 channels"});
  validate_layer(p.background, "background", input_channels, models, out);
  validate_layer(p.foreground, "foreground", input_channels, models, out);
  return out;
}

// ------------------------------------------------------------- execution

namespace {

struct PreparedBlock {
  const BlockSpec* spec;
  Json params;
  std::shared_ptr<const BladeModel> model;
  int index;
};

std::vector<PreparedBlock> prepare(const std::vector<BlockDescriptor>& blocks, const ModelRegistry* models) {
  std::vector<PreparedBlock> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (!b.enabled) continue;
    const BlockSpec* spec = find_block(b.kind);
    if (!spec) throw InvalidInput("unknown block '" + b.kind + "'");
    PreparedBlock pb{spec, resolve_params(*spec, b.params), nullptr, static_cast<int>(i)};
    if (spec->uses_model) {
      const auto name = pb.params.at("model").get<std::string>();
      if (!name.empty()) {
        if (!models) throw ConfigError("block " + b.kind + " names model '" + name + "' but no models are loaded");
        pb.model = models->find(name);
        if (!pb.model) throw ConfigError("unknown model '" + name + "'");
      }
    }
    out.push_back(std::move(pb));
  }
  return out;
}

Image apply_block(const PreparedBlock& b, const Image& img) {
  return b.spec->apply(img, BlockContext{b.params, b.model});
}

Image fit_to(Image img, int width, int height) {
  if (img.width() == width && img.height() == height) return img;
  return resize(img, width, height);
}

void throw_on_diagnostics(const StylePipeline& p, int channels) {
  const auto diags = validate(p, channels, nullptr);
  if (!diags.empty()) throw InvalidInput("style '" + p.name + "' is invalid:\n" + format_diagnostics(diags));
}

}  // namespace

Image run_layer(const std::vector<BlockDescriptor>& blocks, const Image& img, const ModelRegistry* models) {
  Image cur = img;
  for (const auto& b : prepare(blocks, models)) cur = apply_block(b, cur);
  return cur;
}

Image composite(const Image& bg, const Image* fg, CompositeMode mode, const std::array<double, 3>& line_color) {
  Image base = bg;
  if (mode == CompositeMode::foreground_only) base = Image(Plane(Plane::Ones(bg.height(), bg.width())));
  base.clear_chroma();
  if (!fg || mode == CompositeMode::background_only) return base;
  if (fg->width() != bg.width() || fg->height() != bg.height())
    throw InvalidInput("composite layers differ in size");
  const Plane a = clip01(luma(*fg));
  const Plane inv = 1.0 - a;
  const bool gray_line = line_color[0] == line_color[1] && line_color[1] == line_color[2];
  if (base.channels() == 1 && gray_line) return Image(Plane(base.plane(0) * a + line_color[0] * inv));
  const Image rgb = base.channels() == 3 ? base : gray_to_rgb(base);
  std::vector<Plane> out(3);
  for (int c = 0; c < 3; ++c) out[c] = rgb.plane(c) * a + line_color[c] * inv;
  return Image(std::move(out));
}

Image execute(const StylePipeline& p, const Image& img, const ModelRegistry* models) {
  throw_on_diagnostics(p, img.channels());
  const auto bg_blocks = prepare(p.background, models);
  const auto fg_blocks = prepare(p.foreground, models);
  Image bg = img;
  for (const auto& b : bg_blocks) bg = apply_block(b, bg);
  bg = fit_to(std::move(bg), img.width(), img.height());
  if (fg_blocks.empty()) return composite(bg, nullptr, p.composite_mode, p.line_color);
  Image fg = img;
  for (const auto& b : fg_blocks) fg = apply_block(b, fg);
  fg = fit_to(std::move(fg), img.width(), img.height());
  return composite(bg, &fg, p.composite_mode, p.line_color);
}

// ------------------------------------------------------------- benchmark

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchmarkReport benchmark(const StylePipeline& p, const Image& img, int repeats, const ModelRegistry* models) {
  if (repeats < 1) throw InvalidInput("benchmark needs at least one repeat");
  throw_on_diagnostics(p, img.channels());
  const auto bg_blocks = prepare(p.background, models);
  const auto fg_blocks = prepare(p.foreground, models);
  const std::size_t nrows = bg_blocks.size() + fg_blocks.size() + 1;
  std::vector<std::vector<double>> times(nrows);
  std::vector<double> totals;

  for (int r = 0; r < repeats; ++r) {
    const auto t_total = std::chrono::steady_clock::now();
    std::size_t row = 0;
    auto run = [&](const std::vector<PreparedBlock>& blocks) {
      // The layer's copy of the input is charged to its first block.
      auto t0 = std::chrono::steady_clock::now();
      Image cur = blocks.empty() ? Image{} : img;
      for (const auto& b : blocks) {
        cur = apply_block(b, cur);
        times[row++].push_back(seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
      }
      return cur;
    };
    Image bg = run(bg_blocks);
    Image fg = fg_blocks.empty() ? Image{} : run(fg_blocks);
    const auto t0 = std::chrono::steady_clock::now();
    bg = fit_to(std::move(bg), img.width(), img.height());
    if (!fg_blocks.empty()) fg = fit_to(std::move(fg), img.width(), img.height());
    const Image out = composite(bg, fg_blocks.empty() ? nullptr : &fg, p.composite_mode, p.line_color);
    times[row].push_back(seconds_since(t0));
    totals.push_back(seconds_since(t_total));
  }

  BenchmarkReport rep;
  rep.megapixels = static_cast<double>(img.width()) * img.height() / 1e6;
  rep.repeats = repeats;
  auto rate = [&](double s) { return s > 0.0 ? rep.megapixels / s : std::numeric_limits<double>::infinity(); };
  std::size_t row = 0;
  auto add_rows = [&](const std::vector<PreparedBlock>& blocks, const char* layer) {
    for (const auto& b : blocks) {
      const double s = median(times[row++]);
      rep.rows.push_back({layer, b.index, b.spec->kind, s, rate(s)});
    }
  };
  add_rows(bg_blocks, "background");
  add_rows(fg_blocks, "foreground");
  const double sc = median(times[row]);
  rep.rows.push_back({"composite", -1, "composite", sc, rate(sc)});
  rep.total_seconds = median(totals);
  rep.total_megapixels_per_second = rate(rep.total_seconds);
  return rep;
}

Json benchmark_to_json(const BenchmarkReport& r) {
  Json rows = Json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"layer", x.layer},
                    {"index", x.index},
                    {"kind", x.kind},
                    {"seconds", x.seconds},
                    {"mp_per_s", bound_json(x.megapixels_per_second)}});
  return {{"megapixels", r.megapixels},
          {"repeats", r.repeats},
          {"rows", std::move(rows)},
          {"total_seconds", r.total_seconds},
          {"total_mp_per_s", bound_json(r.total_megapixels_per_second)}};
}

}  // namespace styler
