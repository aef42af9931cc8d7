#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etc_cbir/codebook.hpp"
#include "etc_cbir/retrieval_index.hpp"

namespace httplib {
class Server;
}

namespace etc_cbir {

/// The untrusted third party. It stores encrypted images, computes their
/// E-SIMPLE vectors and answers queries; it never sees a key set.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path codebook_path;
  std::filesystem::path index_path;  // empty: in-memory only
  std::filesystem::path storage_dir;
  std::size_t top_k = 10;
};

/// Reads `key=value` lines (listen=host:port, codebook, index, storage, top_k)
/// over `base`. Blank lines and lines starting with '#' are ignored.
ServiceConfig parse_service_config(const std::string& text, ServiceConfig base = {});

struct UploadResult {
  std::string image_id;
  bool lossy = false;
};

struct QueryHit {
  std::size_t rank = 0;
  std::string image_id;
  std::string owner_info;
  double distance = 0.0;
};

struct QueryResponse {
  std::vector<QueryHit> results;
  std::size_t k = 0;
  bool lossy = false;
};

class ImageService {
 public:
  explicit ImageService(ServiceConfig cfg);

  const ServiceConfig& config() const noexcept { return cfg_; }
  const Codebook& codebook() const noexcept { return codebook_; }
  const RetrievalIndex& index() const noexcept { return index_; }

  /// Decodes, indexes and stores an uploaded encrypted image. Throws
  /// duplicate_id, decode_error, dimension_too_small or invalid_field.
  UploadResult upload(std::span<const std::uint8_t> image_bytes, const std::string& image_id,
                      const std::string& owner_info);

  QueryResponse query(std::span<const std::uint8_t> image_bytes, std::optional<std::size_t> k) const;

  /// Stored bytes exactly as uploaded.
  std::optional<std::vector<std::uint8_t>> stored_image(const std::string& image_id) const;

  /// Registers /health, /images, /images/{id} and /query.
  void mount(httplib::Server& server);

  /// Blocks serving HTTP on cfg.host:cfg.port.
  void run();

 private:
  ServiceConfig cfg_;
  Codebook codebook_;
  RetrievalIndex index_;
  std::mutex write_mutex_;  // duplicate check + file write + index add + persist
};

std::string to_json(const QueryResponse& response);

}  // namespace etc_cbir
