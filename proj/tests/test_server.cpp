#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "styler/png_io.hpp"
#include "styler/resample.hpp"
#include "styler/server.hpp"
#include "test_util.hpp"

// After Eigen: resolv.h, pulled in here, defines a _res macro.
#include <httplib.h>

using namespace styler;
namespace fs = std::filesystem;

namespace {

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("styler-server-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    for (const char* d : {"images", "styles", "presets", "models"}) fs::create_directories(root_ / d);
    photo_ = quantize8(styler::testing::random_image(90, 60, 3, 11));
    write_png(photo_, root_ / "images" / "photo.png");
    write_png(Image(Plane(styler::testing::random_plane(20, 20, 12))), root_ / "images" / "gray.png");
    {
      std::ofstream junk(root_ / "images" / "broken.png");
      junk << "not a png";
    }
    StylePipeline preset;
    preset.name = "poster";
    preset.background = {{"posterize", {{"levels", 4}}}};
    save_style(preset, root_ / "presets" / "poster.json");

    ServerConfig cfg;
    cfg.image_dir = root_ / "images";
    cfg.style_dir = root_ / "styles";
    cfg.preset_dir = root_ / "presets";
    cfg.model_dir = root_ / "models";
    cfg.default_max_edge = 45;
    server_ = std::make_unique<DesignServer>(cfg);
  }
  void TearDown() override {
    server_.reset();
    std::error_code ec;
    fs::remove_all(root_, ec);
  }

  static Image quantize8(const Image& img) {
    Image out = img;
    for (int c = 0; c < out.channels(); ++c) out.plane(c) = (out.plane(c) * 255.0).round() / 255.0;
    return out;
  }

  static std::string preview_body(const StylePipeline& s, const std::string& id, int max_edge = -1) {
    Json j = {{"style", style_to_json(s)}, {"image_id", id}};
    if (max_edge > 0) j["max_edge"] = max_edge;
    return j.dump();
  }

  HttpResponse call(const std::string& method, const std::string& path, const std::string& body = "") const {
    return server_->handle(method, path, body);
  }

  fs::path root_;
  Image photo_;
  std::unique_ptr<DesignServer> server_;
};

StylePipeline named(const std::string& name, std::vector<BlockDescriptor> blocks) {
  StylePipeline p;
  p.name = name;
  p.background = std::move(blocks);
  return p;
}

Image png_of(const HttpResponse& r) {
  const auto* b = reinterpret_cast<const std::uint8_t*>(r.body.data());
  return decode_png({b, r.body.size()});
}

}  // namespace

TEST_F(ServerTest, BlocksListsTheRegistry) {
  const auto r = call("GET", "/api/blocks");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(Json::parse(r.body), registry_to_json());
  EXPECT_GE(Json::parse(r.body).size(), 20u);
}

TEST_F(ServerTest, ImagesSkipUnreadableFiles) {
  const auto r = call("GET", "/api/images");
  ASSERT_EQ(r.status, 200);
  const Json j = Json::parse(r.body);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["id"], "gray.png");
  EXPECT_EQ(j[1]["id"], "photo.png");
  EXPECT_EQ(j[1]["width"], 90);
  EXPECT_EQ(j[1]["height"], 60);
}

TEST_F(ServerTest, EmptyStylePreviewIsTheDownscaledSource) {
  const auto r = call("POST", "/api/preview", preview_body(named("empty", {}), "photo.png"));
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.content_type, "image/png");
  const Image got = png_of(r);
  EXPECT_EQ(std::max(got.width(), got.height()), 45);
  const Image want = decode_png(encode_png(fit_within(photo_, 45)));
  EXPECT_TRUE(got == want);

  // A max_edge above the source size leaves it untouched.
  const auto full = call("POST", "/api/preview", preview_body(named("empty", {}), "photo.png", 1000));
  ASSERT_EQ(full.status, 200);
  EXPECT_TRUE(png_of(full) == photo_);
}

TEST_F(ServerTest, PreviewMatchesDirectExecution) {
  const auto style = named("s", {{"posterize", {{"levels", 3}}}, {"saturation", {{"s", 1.4}}}});
  const auto r = call("POST", "/api/preview", preview_body(style, "photo.png", 30));
  ASSERT_EQ(r.status, 200) << r.body;
  const auto expect = encode_png(execute(style, fit_within(photo_, 30)));
  EXPECT_EQ(r.body, std::string(expect.begin(), expect.end()));
}

TEST_F(ServerTest, SameRequestTwiceIsByteIdentical) {
  const auto style = named("s", {{"tv_flow", {{"steps", 3}}}, {"flow_xdog", {{"sigma", 1.0}, {"phi", 0.02}}}});
  const std::string body = preview_body(style, "photo.png");
  const auto a = call("POST", "/api/preview", body);
  const auto b = call("POST", "/api/preview", body);
  ASSERT_EQ(a.status, 200) << a.body;
  EXPECT_EQ(a.body, b.body);
}

TEST_F(ServerTest, InvalidStyleGivesValidatorDiagnostics) {
  const auto bad = named("bad", {{"sparkle"}, {"posterize", {{"levels", 1000}}}});
  const Json want = diagnostics_to_json(validate(bad));
  ASSERT_FALSE(want.empty());
  for (const auto& [path, body] : {std::pair{std::string("/api/validate"), style_to_json(bad).dump()},
                                   std::pair{std::string("/api/preview"), preview_body(bad, "photo.png")}}) {
    const auto r = call("POST", path, body);
    EXPECT_EQ(r.status, 422) << path;
    const Json j = Json::parse(r.body);
    EXPECT_EQ(j["valid"], false);
    EXPECT_EQ(j["diagnostics"], want) << path;
  }
  const auto ok = call("POST", "/api/validate", style_to_json(named("ok", {{"posterize", {{"levels", 4}}}})).dump());
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(Json::parse(ok.body)["valid"], true);
}

TEST_F(ServerTest, PreviewValidatesAgainstTheSourceChannels) {
  const auto color_only = named("c", {{"saturation", {{"s", 1.5}}}});
  const auto r = call("POST", "/api/preview", preview_body(color_only, "gray.png"));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(Json::parse(r.body)["diagnostics"], diagnostics_to_json(validate(color_only, 1)));
}

TEST_F(ServerTest, ErrorStatuses) {
  EXPECT_EQ(call("POST", "/api/preview", "{not json").status, 400);
  EXPECT_EQ(call("POST", "/api/validate", R"({"version":"styler/1","bogus":1})").status, 400);
  EXPECT_EQ(call("POST", "/api/preview", Json{{"style", style_to_json(named("e", {}))}}.dump()).status, 400);
  Json zero_edge = Json::parse(preview_body(named("e", {}), "photo.png"));
  zero_edge["max_edge"] = 0;
  EXPECT_EQ(call("POST", "/api/preview", zero_edge.dump()).status, 400);
  zero_edge["max_edge"] = 1.5;
  EXPECT_EQ(call("POST", "/api/preview", zero_edge.dump()).status, 400);
  EXPECT_EQ(call("POST", "/api/preview", preview_body(named("e", {}), "missing.png")).status, 404);
  EXPECT_EQ(call("POST", "/api/preview", preview_body(named("e", {}), "../images/photo.png")).status, 404);
  EXPECT_EQ(call("GET", "/api/styles/nothing").status, 404);
  EXPECT_EQ(call("GET", "/api/styles/..").status, 400);
  EXPECT_EQ(call("DELETE", "/api/styles/x").status, 404);
  EXPECT_EQ(call("GET", "/api/nowhere").status, 404);
  // A file that exists but is not a PNG fails the render.
  EXPECT_EQ(call("POST", "/api/preview", preview_body(named("e", {}), "broken.png")).status, 500);
}

TEST_F(ServerTest, StyleStoreRoundtrip) {
  EXPECT_EQ(Json::parse(call("GET", "/api/styles").body), Json::array());
  const auto style = named("mine", {{"gaussian", {{"sigma", 1.5}}}, {"posterize", {{"levels", 6}}}});
  const auto put = call("PUT", "/api/styles/mine", style_to_json(style).dump());
  ASSERT_EQ(put.status, 200) << put.body;
  // The editor may wrap the style in an object.
  ASSERT_EQ(call("PUT", "/api/styles/other", Json{{"style", style_to_json(style)}}.dump()).status, 200);
  EXPECT_EQ(Json::parse(call("GET", "/api/styles").body), (Json{"mine", "other"}));
  const auto got = call("GET", "/api/styles/mine");
  ASSERT_EQ(got.status, 200);
  EXPECT_EQ(style_from_json(Json::parse(got.body)), style);
  EXPECT_EQ(load_style(root_ / "styles" / "mine.json"), style);

  // Invalid styles are refused and leave the store alone.
  const auto bad = call("PUT", "/api/styles/mine", style_to_json(named("x", {{"sparkle"}})).dump());
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(load_style(root_ / "styles" / "mine.json"), style);
  EXPECT_EQ(call("PUT", "/api/styles/a%2Fb", style_to_json(style).dump()).status, 400);
}

TEST_F(ServerTest, PresetsAreListedWithContent) {
  {
    std::ofstream junk(root_ / "presets" / "zz_broken.json");
    junk << "{";
  }
  const auto r = call("GET", "/api/presets");
  ASSERT_EQ(r.status, 200);
  const Json j = Json::parse(r.body);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["name"], "poster");
  EXPECT_EQ(style_from_json(j[0]["style"]), load_style(root_ / "presets" / "poster.json"));
}

TEST_F(ServerTest, ServesOverHttp) {
  const int port = server_->bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server_->serve(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);

  const auto blocks = client.Get("/api/blocks");
  ASSERT_TRUE(blocks);
  EXPECT_EQ(blocks->status, 200);
  EXPECT_EQ(Json::parse(blocks->body), registry_to_json());

  const std::string body = preview_body(named("p", {{"posterize", {{"levels", 4}}}}), "photo.png");
  const auto direct = call("POST", "/api/preview", body);
  // Concurrent previews share the server and must agree with the direct path.
  std::vector<std::string> bodies(4);
  std::vector<std::string> types(4);
  {
    std::vector<std::jthread> clients;
    for (int i = 0; i < 4; ++i)
      clients.emplace_back([&, i] {
        httplib::Client c("127.0.0.1", port);
        if (auto res = c.Post("/api/preview", body, "application/json")) {
          bodies[i] = res->body;
          types[i] = res->get_header_value("Content-Type");
        }
      });
  }
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(bodies[i], direct.body);
    EXPECT_EQ(types[i], "image/png");
  }

  const auto bad = client.Post("/api/validate", style_to_json(named("x", {{"sparkle"}})).dump(), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);

  server_->stop();
  loop.join();
}
