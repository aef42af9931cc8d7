#include "etc_cbir/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "etc_cbir/error.hpp"
#include "etc_cbir/esimple.hpp"
#include "etc_cbir/fnv1a.hpp"
#include "etc_cbir/image_io.hpp"

namespace etc_cbir {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t parse_count(const std::string& text, std::string_view what) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be a positive integer");
  }
  return value;
}

RetrievalIndex open_index(const ServiceConfig& cfg, const Codebook& cb) {
  if (cfg.index_path.empty() || !std::filesystem::exists(cfg.index_path)) {
    return RetrievalIndex(cb.size(), cb.id());
  }
  RetrievalIndex index = RetrievalIndex::load(cfg.index_path);
  if (index.dim() != cb.size() || index.codebook_id() != cb.id()) {
    throw Error(ErrorCode::codebook_mismatch,
                cfg.index_path.string() + " was built with a different codebook");
  }
  return index;
}

DecodedImage decode_upload(std::span<const std::uint8_t> bytes) {
  DecodedImage decoded = decode_image(bytes);
  decoded.raster = crop_to_block_multiple(decoded.raster);
  return decoded;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::duplicate_id: return 409;
    case ErrorCode::unknown_id: return 404;
    case ErrorCode::decode_error:
    case ErrorCode::dimension_too_small:
    case ErrorCode::dimension_not_multiple_of_16:
    case ErrorCode::invalid_field:
    case ErrorCode::invalid_argument:
      return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, nlohmann::json{{"error", message}}.dump());
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string form_field(const httplib::Request& req, const std::string& name) {
  if (req.has_file(name)) return req.get_file_value(name).content;
  if (req.has_param(name)) return req.get_param_value(name);
  return {};
}

}  // namespace

ServiceConfig parse_service_config(const std::string& text, ServiceConfig cfg) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::parse_error, "config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) throw Error(ErrorCode::parse_error, "listen must be host:port");
      cfg.host = value.substr(0, colon);
      cfg.port = static_cast<int>(parse_count(value.substr(colon + 1), "port"));
    } else if (key == "codebook") {
      cfg.codebook_path = value;
    } else if (key == "index") {
      cfg.index_path = value;
    } else if (key == "storage") {
      cfg.storage_dir = value;
    } else if (key == "top_k") {
      cfg.top_k = parse_count(value, "top_k");
    } else {
      throw Error(ErrorCode::parse_error, "unknown config key '" + key + "'");
    }
  }
  return cfg;
}

ImageService::ImageService(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      codebook_(Codebook::load(cfg_.codebook_path)),
      index_(open_index(cfg_, codebook_)) {
  if (cfg_.storage_dir.empty()) throw Error(ErrorCode::invalid_argument, "storage directory not set");
  std::filesystem::create_directories(cfg_.storage_dir);
}

UploadResult ImageService::upload(std::span<const std::uint8_t> image_bytes,
                                  const std::string& image_id, const std::string& owner_info) {
  if (image_id.empty()) throw Error(ErrorCode::invalid_field, "image_id is required");
  if (index_.contains(image_id)) {
    throw Error(ErrorCode::duplicate_id, "image_id '" + image_id + "' already stored");
  }
  const DecodedImage decoded = decode_upload(image_bytes);
  ESimpleVector v = esimple(decoded.raster, codebook_);

  char name[32];
  std::snprintf(name, sizeof name, "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::string_view(image_id))));
  const auto ext = sniff_format(image_bytes) == ImageFormat::jpeg ? ".jpg" : ".png";
  const std::filesystem::path stored = cfg_.storage_dir / (std::string(name) + ext);

  std::lock_guard lock(write_mutex_);
  if (index_.contains(image_id)) {
    throw Error(ErrorCode::duplicate_id, "image_id '" + image_id + "' already stored");
  }
  write_file_atomic(stored, image_bytes);
  index_.add({image_id, std::move(v), owner_info, stored.string()});
  if (!cfg_.index_path.empty()) index_.save(cfg_.index_path);
  return {image_id, decoded.lossy};
}

QueryResponse ImageService::query(std::span<const std::uint8_t> image_bytes,
                                  std::optional<std::size_t> k) const {
  const DecodedImage decoded = decode_upload(image_bytes);
  QueryResponse response;
  response.k = k.value_or(cfg_.top_k);
  response.lossy = decoded.lossy;
  for (const RankedResult& r : index_.query(esimple(decoded.raster, codebook_), response.k)) {
    const auto entry = index_.get(r.image_id);
    response.results.push_back({r.rank, r.image_id, entry ? entry->owner_info : "", r.distance});
  }
  return response;
}

std::optional<std::vector<std::uint8_t>> ImageService::stored_image(const std::string& image_id) const {
  const auto entry = index_.get(image_id);
  if (!entry) return std::nullopt;
  return read_file_bytes(entry->stored_path);
}

void ImageService::mount(httplib::Server& server) {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, R"({"status":"ok"})");
  });

  server.Post("/images", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image")) throw Error(ErrorCode::invalid_argument, "multipart field 'image' missing");
    const UploadResult r =
        upload(as_bytes(req.get_file_value("image").content), form_field(req, "image_id"),
               form_field(req, "owner_info"));
    send_json(res, 201, nlohmann::json{{"image_id", r.image_id}, {"lossy", r.lossy}}.dump());
  }));

  server.Post("/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image")) throw Error(ErrorCode::invalid_argument, "multipart field 'image' missing");
    std::optional<std::size_t> k;
    if (const std::string raw = form_field(req, "k"); !raw.empty()) k = parse_count(raw, "k");
    send_json(res, 200, to_json(query(as_bytes(req.get_file_value("image").content), k)));
  }));

  server.Get(R"(/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto bytes = stored_image(id);
    if (!bytes) throw Error(ErrorCode::unknown_id, "no image '" + id + "'");
    const bool jpeg = sniff_format(*bytes) == ImageFormat::jpeg;
    res.status = 200;
    res.set_content(std::string(bytes->begin(), bytes->end()), jpeg ? "image/jpeg" : "image/png");
  }));
}

void ImageService::run() {
  httplib::Server server;
  mount(server);
  if (!server.listen(cfg_.host, cfg_.port)) {
    throw Error(ErrorCode::io_error, "cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
}

std::string to_json(const QueryResponse& response) {
  nlohmann::ordered_json j;
  j["results"] = nlohmann::ordered_json::array();
  for (const QueryHit& h : response.results) {
    j["results"].push_back({{"rank", h.rank},
                            {"image_id", h.image_id},
                            {"owner_info", h.owner_info},
                            {"distance", h.distance}});
  }
  j["k"] = response.k;
  j["lossy"] = response.lossy;
  return j.dump();
}

}  // namespace etc_cbir
