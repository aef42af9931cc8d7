#pragma once

#include <CLI11.hpp>
#include <cstdlib>
#include <optional>
#include <string>

#include "etc_cbir/error.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/service.hpp"

namespace etc_cbir::tools {

// Flags shared by `etc-cbir serve` and `etc-cbir-server`. Unset flags fall
// back to the file named by --config or ETC_CBIR_CONFIG.
struct ServeFlags {
  std::string config;
  std::optional<std::string> listen;
  std::optional<std::string> codebook;
  std::optional<std::string> index;
  std::optional<std::string> storage;
  std::optional<std::size_t> top_k;
};

inline void add_serve_flags(CLI::App& app, ServeFlags& f) {
  app.add_option("--config", f.config, "key=value config file (default: $ETC_CBIR_CONFIG)");
  app.add_option("--listen", f.listen, "host:port to bind (default 127.0.0.1:8080)");
  app.add_option("--codebook", f.codebook, "codebook file");
  app.add_option("--index", f.index, "index file, created on first upload");
  app.add_option("--storage", f.storage, "directory for uploaded encrypted images");
  app.add_option("--top-k", f.top_k, "default result count for /query")->check(CLI::PositiveNumber);
}

inline ServiceConfig resolve_serve_flags(const ServeFlags& f) {
  ServiceConfig cfg;
  std::string config_path = f.config;
  if (config_path.empty()) {
    if (const char* env = std::getenv("ETC_CBIR_CONFIG")) config_path = env;
  }
  if (!config_path.empty()) {
    const auto bytes = read_file_bytes(config_path);
    cfg = parse_service_config(std::string(bytes.begin(), bytes.end()), cfg);
  }
  std::string overrides;
  if (f.listen) overrides += "listen=" + *f.listen + "\n";
  if (f.top_k) overrides += "top_k=" + std::to_string(*f.top_k) + "\n";
  cfg = parse_service_config(overrides, cfg);
  if (f.codebook) cfg.codebook_path = *f.codebook;
  if (f.index) cfg.index_path = *f.index;
  if (f.storage) cfg.storage_dir = *f.storage;
  if (cfg.codebook_path.empty() || cfg.storage_dir.empty()) {
    throw Error(ErrorCode::invalid_argument, "serve needs --codebook and --storage (or a config file)");
  }
  return cfg;
}

}  // namespace etc_cbir::tools
