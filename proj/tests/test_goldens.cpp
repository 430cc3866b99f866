#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "styler/parallel.hpp"
#include "styler/pipeline.hpp"
#include "styler/png_io.hpp"

using namespace styler;
namespace fs = std::filesystem;

// Regenerate with:
//   styler apply --model-dir models --style styles/NAME.json --in data/test_image.png --out tests/goldens/NAME.png

namespace {

const fs::path kRoot = STYLER_SOURCE_DIR;

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string render(const fs::path& style, const Image& img, const ModelRegistry& models) {
  const auto png = encode_png(execute(load_style(style), img, &models));
  return {png.begin(), png.end()};
}

class Golden : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST(GoldenSet, SixStylesShipWithGoldens) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(kRoot / "styles")) {
    if (e.path().extension() != ".json") continue;
    ++n;
    EXPECT_TRUE(fs::exists(kRoot / "tests" / "goldens" / (e.path().stem().string() + ".png"))) << e.path();
    const auto diags = validate(load_style(e.path()), 3, nullptr);
    EXPECT_TRUE(diags.empty()) << format_diagnostics(diags);
  }
  EXPECT_EQ(n, 6);
}

TEST_P(Golden, ByteIdenticalAcrossRunsAndThreadCounts) {
  const fs::path style = kRoot / "styles" / (GetParam() + ".json");
  const std::string golden = file_bytes(kRoot / "tests" / "goldens" / (GetParam() + ".png"));
  ASSERT_FALSE(golden.empty());
  const Image img = read_png(kRoot / "data" / "test_image.png");
  const ModelRegistry models(kRoot / "models");
  ASSERT_TRUE(validate(load_style(style), 3, &models).empty());

  const int saved = thread_count();
  for (int threads : {1, 2, 4, 0}) {
    set_thread_count(threads);
    EXPECT_TRUE(render(style, img, models) == golden) << GetParam() << " with " << threads << " threads";
  }
  EXPECT_TRUE(render(style, img, models) == golden) << GetParam() << " second run";
  set_thread_count(saved);
}

INSTANTIATE_TEST_SUITE_P(Styles, Golden,
                         ::testing::Values("orange_ink", "crayon", "sketch", "abstract", "heavy", "blob"));
