#include "styler/server.hpp"

#include <algorithm>
#include <regex>

#include <httplib.h>

#include "styler/error.hpp"
#include "styler/png_io.hpp"
#include "styler/resample.hpp"

namespace styler {

namespace fs = std::filesystem;

struct DesignServer::Http {
  httplib::Server server;
};

namespace {

HttpResponse json_response(int status, const Json& j) { return {status, "application/json", j.dump()}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

HttpResponse diagnostics_response(const std::vector<Diagnostic>& d) {
  return json_response(422, {{"valid", false}, {"diagnostics", diagnostics_to_json(d)}});
}

bool safe_name(const std::string& s) {
  static const std::regex re("[A-Za-z0-9_.-]+");
  return std::regex_match(s, re) && s.find("..") == std::string::npos;
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (dir.empty() || !fs::is_directory(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("request body is not valid JSON: ") + e.what());
  }
}

/// Accepts either a bare style or {"style": ...}.
StylePipeline style_in(const Json& j) {
  if (j.is_object() && j.contains("style") && !j.contains("version")) return style_from_json(j.at("style"));
  return style_from_json(j);
}

}  // namespace

DesignServer::DesignServer(ServerConfig config)
    : config_(std::move(config)), models_(config_.model_dir), http_(std::make_unique<Http>()) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  http_->server.Get(".*", route);
  http_->server.Put(".*", route);
  http_->server.Post(".*", route);
  http_->server.set_payload_max_length(16u << 20);
}

DesignServer::~DesignServer() { stop(); }

int DesignServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->server.bind_to_any_port(host);
  return http_->server.bind_to_port(host, port) ? port : -1;
}

bool DesignServer::serve() { return http_->server.listen_after_bind(); }

void DesignServer::stop() {
  if (http_) http_->server.stop();
}

HttpResponse DesignServer::handle(const std::string& method, const std::string& path, const std::string& body) const {
  static const std::string styles_prefix = "/api/styles/";
  try {
    if (method == "GET" && path == "/api/blocks") return json_response(200, registry_to_json());
    if (method == "GET" && path == "/api/images") return get_images();
    if (method == "GET" && path == "/api/styles") return get_styles();
    if (method == "GET" && path == "/api/presets") return get_presets();
    if (method == "POST" && path == "/api/validate") return post_validate(body);
    if (method == "POST" && path == "/api/preview") return post_preview(body);
    if (path.starts_with(styles_prefix)) {
      const std::string name = path.substr(styles_prefix.size());
      if (method == "GET") return get_style(name);
      if (method == "PUT") return put_style(name, body);
    }
    return error_response(404, "no route for " + method + " " + path);
  } catch (const FormatError& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse DesignServer::get_images() const {
  Json list = Json::array();
  for (const auto& p : files_with_extension(config_.image_dir, ".png")) {
    Json item = {{"id", p.filename().string()}};
    try {
      const auto img = image(p.filename().string());
      item["width"] = img->width();
      item["height"] = img->height();
    } catch (const Error&) {
      continue;  // unreadable files are not offered
    }
    list.push_back(std::move(item));
  }
  return json_response(200, list);
}

HttpResponse DesignServer::get_styles() const {
  Json list = Json::array();
  std::lock_guard lock(store_mutex_);
  for (const auto& p : files_with_extension(config_.style_dir, ".json")) list.push_back(p.stem().string());
  return json_response(200, list);
}

HttpResponse DesignServer::get_style(const std::string& name) const {
  if (!safe_name(name)) return error_response(400, "invalid style name");
  std::lock_guard lock(store_mutex_);
  const fs::path path = config_.style_dir / (name + ".json");
  std::error_code ec;
  if (config_.style_dir.empty() || !fs::is_regular_file(path, ec)) return error_response(404, "unknown style " + name);
  return json_response(200, style_to_json(load_style(path)));
}

HttpResponse DesignServer::put_style(const std::string& name, const std::string& body) const {
  if (!safe_name(name)) return error_response(400, "invalid style name");
  if (config_.style_dir.empty()) return error_response(500, "no style directory configured");
  StylePipeline style = style_in(parse_body(body));
  const auto diags = validate(style, 3, &models_);
  if (!diags.empty()) return diagnostics_response(diags);
  std::lock_guard lock(store_mutex_);
  std::error_code ec;
  fs::create_directories(config_.style_dir, ec);
  const fs::path path = config_.style_dir / (name + ".json");
  const fs::path tmp = config_.style_dir / (name + ".json.tmp");
  save_style(style, tmp);
  fs::rename(tmp, path);
  return json_response(200, {{"name", name}, {"saved", true}});
}

HttpResponse DesignServer::get_presets() const {
  Json list = Json::array();
  for (const auto& p : files_with_extension(config_.preset_dir, ".json")) {
    try {
      list.push_back({{"name", p.stem().string()}, {"style", style_to_json(load_style(p))}});
    } catch (const Error&) {
      continue;  // a broken preset file is skipped rather than failing the listing
    }
  }
  return json_response(200, list);
}

HttpResponse DesignServer::post_validate(const std::string& body) const {
  const auto style = style_in(parse_body(body));
  const auto diags = validate(style, 3, &models_);
  if (!diags.empty()) return diagnostics_response(diags);
  return json_response(200, {{"valid", true}, {"diagnostics", Json::array()}});
}

HttpResponse DesignServer::post_preview(const std::string& body) const {
  const Json j = parse_body(body);
  if (!j.is_object()) throw FormatError("preview request must be an object");
  for (const auto& [k, v] : j.items())
    if (k != "style" && k != "image_id" && k != "max_edge") throw FormatError("unknown key '" + k + "' in request");
  if (!j.contains("style")) throw FormatError("preview request needs a style");
  if (!j.contains("image_id") || !j["image_id"].is_string()) throw FormatError("preview request needs image_id");
  int max_edge = config_.default_max_edge;
  if (j.contains("max_edge")) {
    if (!j["max_edge"].is_number_integer() || j["max_edge"].get<int>() < 1)
      throw FormatError("max_edge must be a positive integer");
    max_edge = j["max_edge"].get<int>();
  }
  const StylePipeline style = style_from_json(j["style"]);
  const std::string id = j["image_id"].get<std::string>();
  std::shared_ptr<const Image> src;
  try {
    src = image(id);
  } catch (const Error& e) {
    // The request was fine; the file on disk is not.
    return error_response(500, std::string("cannot load image: ") + e.what());
  }
  if (!src) return error_response(404, "unknown image " + id);
  const auto diags = validate(style, src->channels(), &models_);
  if (!diags.empty()) return diagnostics_response(diags);
  try {
    const Image small = fit_within(*src, max_edge);
    const auto png = encode_png(execute(style, small, &models_));
    return {200, "image/png", std::string(png.begin(), png.end())};
  } catch (const std::exception& e) {
    return error_response(500, std::string("render failed: ") + e.what());
  }
}

std::shared_ptr<const Image> DesignServer::image(const std::string& id) const {
  if (!safe_name(id)) return nullptr;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = images_.find(id); it != images_.end()) return it->second;
  }
  const fs::path path = config_.image_dir / id;
  std::error_code ec;
  if (config_.image_dir.empty() || !fs::is_regular_file(path, ec)) return nullptr;
  auto img = std::make_shared<const Image>(read_png(path));
  std::lock_guard lock(cache_mutex_);
  return images_.emplace(id, std::move(img)).first->second;
}

}  // namespace styler
