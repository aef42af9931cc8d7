#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "etc_cbir/esimple.hpp"

namespace etc_cbir {

struct IndexEntry {
  std::string image_id;
  ESimpleVector vector;
  std::string owner_info;   // opaque to the index
  std::string stored_path;  // where the encrypted image lives

  bool operator==(const IndexEntry&) const = default;
};

struct RankedResult {
  std::string image_id;
  double distance = 0.0;  // plain l2
  std::size_t rank = 0;   // 1-based

  bool operator==(const RankedResult&) const = default;
};

/// Exact full-scan l2 index over E-SIMPLE vectors built with one codebook.
/// Safe for concurrent readers with a single writer; every query sees a
/// consistent snapshot.
class RetrievalIndex {
 public:
  RetrievalIndex(std::size_t dim, std::uint64_t codebook_id);
  RetrievalIndex(RetrievalIndex&& other) noexcept;
  RetrievalIndex& operator=(RetrievalIndex&&) = delete;
  RetrievalIndex(const RetrievalIndex&) = delete;
  RetrievalIndex& operator=(const RetrievalIndex&) = delete;

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t codebook_id() const noexcept { return codebook_id_; }
  std::size_t size() const;

  /// Throws duplicate_id, codebook_mismatch, dimension_mismatch or
  /// invalid_field (ids/paths/owner info may not contain tabs or newlines).
  void add(IndexEntry entry);
  bool contains(const std::string& image_id) const;
  std::optional<IndexEntry> get(const std::string& image_id) const;
  std::vector<IndexEntry> entries() const;

  /// The k nearest entries ordered by (distance, image_id).
  std::vector<RankedResult> query(const ESimpleVector& q, std::size_t k) const;

  std::string serialize() const;
  static RetrievalIndex parse(const std::string& text);

  /// Atomic: temp file then rename.
  void save(const std::filesystem::path& path) const;
  static RetrievalIndex load(const std::filesystem::path& path);

 private:
  void check_vector(const ESimpleVector& v) const;

  mutable std::shared_mutex mutex_;
  std::size_t dim_;
  std::uint64_t codebook_id_;
  std::vector<IndexEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace etc_cbir
