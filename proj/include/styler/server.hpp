#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "styler/pipeline.hpp"

namespace styler {

struct ServerConfig {
  std::filesystem::path image_dir;   ///< source images offered for preview (*.png)
  std::filesystem::path style_dir;   ///< read/write store for saved styles
  std::filesystem::path preset_dir;  ///< read-only designed styles
  std::filesystem::path model_dir;   ///< BLADE models referenced by styles
  int default_max_edge = 720;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Preview service for the style editor. Requests are handled statelessly
/// apart from the style store, whose writes are serialized.
///
///   GET  /api/blocks          block registry with parameter schemas
///   GET  /api/images          available source images
///   GET  /api/styles          saved style names
///   GET  /api/styles/{name}   one saved style
///   PUT  /api/styles/{name}   save a style (validated first)
///   GET  /api/presets         shipped styles, name and content
///   POST /api/validate        style -> diagnostics (422 when non-empty)
///   POST /api/preview         {style, image_id, max_edge} -> PNG
class DesignServer {
 public:
  explicit DesignServer(ServerConfig config);
  ~DesignServer();

  DesignServer(const DesignServer&) = delete;
  DesignServer& operator=(const DesignServer&) = delete;

  /// Routes one request without any socket involved.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  /// Binds to host:port (port 0 picks a free one) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop() is called.
  bool serve();
  void stop();

  const ModelRegistry& models() const { return models_; }

 private:
  HttpResponse get_images() const;
  HttpResponse get_styles() const;
  HttpResponse get_style(const std::string& name) const;
  HttpResponse put_style(const std::string& name, const std::string& body) const;
  HttpResponse get_presets() const;
  HttpResponse post_validate(const std::string& body) const;
  HttpResponse post_preview(const std::string& body) const;

  std::shared_ptr<const Image> image(const std::string& id) const;

  ServerConfig config_;
  ModelRegistry models_;
  mutable std::mutex store_mutex_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const Image>> images_;
  struct Http;
  std::unique_ptr<Http> http_;
};

}  // namespace styler
