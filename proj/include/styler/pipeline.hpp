#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "styler/blade.hpp"
#include "styler/image.hpp"

namespace styler {

using Json = nlohmann::json;

/// Named BLADE models resolved from a directory (`<dir>/<name>.bld`) or
/// registered in memory. Lookups are thread-safe; loaded models are shared
/// read-only.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& directory() const { return dir_; }

  void add(const std::string& name, BladeModel model);

  /// nullptr when no model of that name exists. Throws FormatError/IoError
  /// when the file exists but cannot be loaded.
  std::shared_ptr<const BladeModel> find(const std::string& name) const;

  /// Names of in-memory models plus every *.bld in the directory, sorted.
  std::vector<std::string> names() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const BladeModel>> cache_;
};

enum class ParamType { number, integer, choice, color, text };

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::number;
  double min = 0.0;
  double max = 1.0;
  bool min_exclusive = false;
  bool required = false;
  Json default_value;
  double ui_max = 1.0;  ///< slider end for unbounded ranges
  std::vector<std::string> choices;
  std::string help;
};

/// Channel layout of an image flowing through a layer.
struct ChannelState {
  int channels = 3;
  bool stash = false;  ///< chroma stashed by To Grayscale
};

struct BlockContext {
  const Json& params;  ///< resolved: every declared parameter present
  std::shared_ptr<const BladeModel> model;
};

struct BlockSpec {
  std::string kind;
  std::string label;
  std::string description;
  std::vector<ParamSpec> params;
  /// Checks the incoming layout; returns an error message or empty.
  std::function<std::string(const ChannelState&)> check_input;
  std::function<ChannelState(const ChannelState&, const Json&)> output;
  /// Optional cross-parameter check on resolved params; error message or empty.
  std::function<std::string(const Json&)> check_params;
  std::function<Image(const Image&, const BlockContext&)> apply;
  bool uses_model = false;
};

const std::vector<BlockSpec>& block_registry();
const BlockSpec* find_block(const std::string& kind);

/// Registry as served to editors: kinds, labels and parameter schemas.
Json registry_to_json();

struct BlockDescriptor {
  std::string kind;
  Json params = Json::object();
  bool enabled = true;

  bool operator==(const BlockDescriptor&) const = default;
};

enum class CompositeMode { multiply, foreground_only, background_only };

std::string composite_mode_name(CompositeMode m);

struct StylePipeline {
  std::string name;
  std::vector<BlockDescriptor> background;
  std::vector<BlockDescriptor> foreground;
  CompositeMode composite_mode = CompositeMode::multiply;
  std::array<double, 3> line_color{0.0, 0.0, 0.0};

  bool operator==(const StylePipeline&) const = default;
};

inline constexpr const char* kStyleVersion = "styler/1";

/// Strict parse: unknown keys, wrong types or a wrong version throw
/// FormatError. Parameter values are not range-checked here (see validate).
StylePipeline style_from_json(const Json& j);
Json style_to_json(const StylePipeline& p);
StylePipeline load_style(const std::filesystem::path& path);
void save_style(const StylePipeline& p, const std::filesystem::path& path);

struct Diagnostic {
  std::string layer;  ///< "background", "foreground" or "" for style-level
  int index = -1;
  std::string kind;
  std::string param;
  std::string code;  ///< unknown_block, unknown_param, missing_param, type, out_of_range, channel, model
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

Json diagnostics_to_json(const std::vector<Diagnostic>& d);
std::string format_diagnostics(const std::vector<Diagnostic>& d);

/// Static checks of every block against the registry and the channel flow
/// of each layer. When `models` is given, model names must resolve.
std::vector<Diagnostic> validate(const StylePipeline& p, int input_channels = 3,
                                 const ModelRegistry* models = nullptr);

/// Declared defaults merged with the block's explicit parameters.
Json resolve_params(const BlockSpec& spec, const Json& params);

/// Runs one layer on a copy of `img`; disabled blocks are skipped.
Image run_layer(const std::vector<BlockDescriptor>& blocks, const Image& img, const ModelRegistry* models);

/// out = bg a + line_color (1 - a) with a = clip(luma(fg)); a null `fg`
/// means a == 1. Both layers must already match in size. The result is
/// 1-channel only when bg is and line_color is gray.
Image composite(const Image& bg, const Image* fg, CompositeMode mode, const std::array<double, 3>& line_color);

/// Validates, resolves models and renders. Throws InvalidInput on
/// diagnostics and ConfigError on unresolved models.
Image execute(const StylePipeline& p, const Image& img, const ModelRegistry* models = nullptr);

struct BenchmarkRow {
  std::string layer;  ///< background, foreground, or composite
  int index = -1;
  std::string kind;
  double seconds = 0.0;  ///< median over repeats
  double megapixels_per_second = 0.0;
};

struct BenchmarkReport {
  double megapixels = 0.0;
  int repeats = 0;
  std::vector<BenchmarkRow> rows;  ///< enabled blocks in order, then composite
  double total_seconds = 0.0;      ///< median of whole-pipeline wall time
  double total_megapixels_per_second = 0.0;
};

BenchmarkReport benchmark(const StylePipeline& p, const Image& img, int repeats,
                          const ModelRegistry* models = nullptr);
Json benchmark_to_json(const BenchmarkReport& r);

}  // namespace styler
