#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "styler/cli.hpp"
#include "styler/color.hpp"
#include "styler/effects.hpp"
#include "styler/metrics.hpp"
#include "styler/model_io.hpp"
#include "styler/pipeline.hpp"
#include "styler/png_io.hpp"
#include "test_util.hpp"

using namespace styler;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell; returns its exit status.
int exe(const std::string& args) {
  const int status = std::system((std::string(STYLER_EXE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("styler-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    Image img = styler::testing::random_image(40, 30, 3, 21);
    for (int c = 0; c < 3; ++c) img.plane(c) = (0.3 * img.plane(c) + 0.7 * styler::testing::smooth_scene(40, 30, c)).cwiseMax(0.0).cwiseMin(1.0);
    write_png(img, path("in.png"));
    StylePipeline empty;
    empty.name = "empty";
    save_style(empty, path("empty.json"));
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string bytes_of(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(CliTest, ApplyEmptyStyleKeepsTheImage) {
  const auto r = cli({"apply", "--style", path("empty.json"), "--in", path("in.png"), "--out", path("out.png")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(read_png(path("out.png")) == read_png(path("in.png")));
  // Same through the real executable.
  ASSERT_EQ(exe("apply --style " + path("empty.json") + " --in " + path("in.png") + " --out " + path("out2.png")), 0);
  EXPECT_EQ(bytes_of(path("out.png")), bytes_of(path("out2.png")));
}

TEST_F(CliTest, ApplyIsIdempotent) {
  StylePipeline s;
  s.name = "s";
  s.background = {{"tv_flow", {{"steps", 4}}}, {"luma_posterize", {{"levels", 6}}}};
  save_style(s, path("s.json"));
  for (const char* o : {"a.png", "b.png"})
    ASSERT_EQ(cli({"apply", "--style", path("s.json"), "--in", path("in.png"), "--out", path(o)}).code, kExitOk);
  EXPECT_EQ(bytes_of(path("a.png")), bytes_of(path("b.png")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(exe(""), kExitUsage);
  EXPECT_EQ(exe("frobnicate"), kExitUsage);
  EXPECT_EQ(exe("apply --in x.png"), kExitUsage);
  EXPECT_EQ(exe("--help"), kExitOk);
  EXPECT_EQ(cli({"train", "--effect", "sepia", "--inputs", dir_.string(), "--out", path("m.bld")}).code, kExitUsage);

  StylePipeline bad;
  bad.background = {{"posterize", {{"levels", 1}}}};
  save_style(bad, path("bad.json"));
  const auto v = cli({"apply", "--style", path("bad.json"), "--in", path("in.png"), "--out", path("o.png")});
  EXPECT_EQ(v.code, kExitValidation);
  EXPECT_NE(v.err.find("levels"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("o.png")));

  EXPECT_EQ(cli({"apply", "--style", path("empty.json"), "--in", path("nope.png"), "--out", path("o.png")}).code,
            kExitIo);
  EXPECT_EQ(cli({"infer", "--model", path("nope.bld"), "--in", path("in.png"), "--out", path("o.png")}).code, kExitIo);
  {
    std::ofstream junk(path("junk.bld"), std::ios::binary);
    junk << "BLADE-ish garbage";
  }
  EXPECT_EQ(cli({"infer", "--model", path("junk.bld"), "--in", path("in.png"), "--out", path("o.png")}).code,
            kExitValidation);

  fs::create_directories(dir_ / "styles");
  save_style(bad, dir_ / "styles" / "x.json");
  StylePipeline ok;
  ok.name = "ok";
  save_style(ok, dir_ / "styles" / "ok.json");
  const auto sc = cli({"score", "--dir", path("styles"), "--image", path("in.png"), "--scorer", "false"});
  EXPECT_EQ(sc.code, kExitNumeric);
}

TEST_F(CliTest, GenWritesValidStyles) {
  const auto r = cli({"gen", "--seeds", "0..9", "--out-dir", path("gen")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "gen")) {
    ++n;
    const auto style = load_style(e.path());
    EXPECT_TRUE(validate(style).empty()) << e.path();
  }
  EXPECT_EQ(n, 10);
  EXPECT_EQ(cli({"gen", "--seeds", "9..3", "--out-dir", path("g2")}).code, kExitUsage);
}

TEST_F(CliTest, ScoreWithJsonAndSheet) {
  ASSERT_EQ(cli({"gen", "--seeds", "3..6", "--out-dir", path("gen")}).code, kExitOk);
  const auto r = cli({"score", "--dir", path("gen"), "--image", path("in.png"), "--scorer", "builtin", "--json",
                      "--sorted", "--report", path("sheet")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j.size(), 4u);
  for (std::size_t i = 1; i < j.size(); ++i) EXPECT_GE(j[i - 1]["score"].get<double>(), j[i]["score"].get<double>());
  EXPECT_TRUE(fs::exists(dir_ / "sheet" / "report.html"));
}

TEST_F(CliTest, BenchJson) {
  StylePipeline s;
  s.background = {{"gaussian", {{"sigma", 1.0}}}, {"posterize", {{"levels", 4}}}};
  save_style(s, path("s.json"));
  const auto r = cli({"bench", "--style", path("s.json"), "--in", path("in.png"), "--repeats", "2", "--json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j.contains("rows"));
  EXPECT_GE(j["rows"].size(), 2u);
}

TEST_F(CliTest, TrainDetailThenInferMatchesReference) {
  // Four training crops and one held-out crop from the photo set, 8-bit gray.
  const fs::path photos = STYLER_PHOTOSET_DIR;
  ASSERT_TRUE(fs::exists(photos / "train" / "train_03.png")) << "photo set missing";
  fs::create_directories(dir_ / "train");
  auto crop = [](const fs::path& src, int x, int y) {
    return Image(Plane(luma(read_png(src)).block(y, x, 256, 256)));
  };
  for (int i = 0; i < 4; ++i)
    write_png(crop(photos / "train" / ("train_0" + std::to_string(i) + ".png"), 128 * i, 384),
              dir_ / "train" / ("t" + std::to_string(i) + ".png"));
  write_png(crop(photos / "test" / "test_00.png", 300, 300), path("held.png"));

  const auto t = cli({"train", "--effect", "detail", "--param", "delta=-20", "--inputs", path("train"), "--out",
                      path("detail.bld")});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  ASSERT_EQ(cli({"infer", "--model", path("detail.bld"), "--in", path("held.png"), "--out", path("approx.png")}).code,
            kExitOk);
  const auto model = load_model(path("detail.bld"));
  EXPECT_EQ(model.info.effect, "detail");

  const Image held = read_png(path("held.png"));
  const Image ref = render_reference(Effect::detail, held, resolve_effect_params(Effect::detail, {{"delta", -20.0}}));
  const Image approx = read_png(path("approx.png"));
  EXPECT_GE(psnr(ref.plane(0), approx.plane(0)), 34.0);
  EXPECT_GE(mssim(ref.plane(0), approx.plane(0)), 0.93);

  const auto e = cli({"eval", "--model", path("detail.bld"), "--inputs", path("train")});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(e.out.find("mean  PSNR"), std::string::npos);

  ASSERT_EQ(cli({"collage", "--model", path("detail.bld"), "--out", path("collage.png")}).code, kExitOk);
  EXPECT_GT(read_png(path("collage.png")).width(), 0);
}

TEST_F(CliTest, ModelDirPrecedence) {
  // The flag wins over the environment; an unknown model is a validation failure.
  StylePipeline s;
  s.background = {{"etf", {{"model", "missing"}}}};
  save_style(s, path("m.json"));
  ::setenv("STYLER_MODEL_DIR", (dir_ / "nowhere").c_str(), 1);
  EXPECT_EQ(cli({"apply", "--style", path("m.json"), "--in", path("in.png"), "--out", path("o.png")}).code,
            kExitValidation);
  ::unsetenv("STYLER_MODEL_DIR");
}
