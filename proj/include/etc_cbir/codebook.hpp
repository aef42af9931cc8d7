#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "etc_cbir/mcedd.hpp"
#include "etc_cbir/raster.hpp"

namespace etc_cbir {

/// Row-major set of equal-length real vectors.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t dim) : dim_(dim) {}
  FeatureMatrix(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * dim_, dim_}; }

  void append(std::span<const double> v);
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Index of the closest row by squared l2; ties go to the lowest index.
std::size_t nearest_row(const FeatureMatrix& rows, std::span<const double> v);

struct KMeansConfig {
  std::size_t clusters = 256;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;     // stop when relative inertia improvement drops below
  unsigned threads = 0;  // 0: hardware concurrency; results never depend on it
};

struct KMeansResult {
  FeatureMatrix initial_centroids;  // k-means++ seeding
  FeatureMatrix centroids;
  /// Inertia of each assignment step, followed by the inertia of the final
  /// centroids. Non-increasing.
  std::vector<double> inertia_history;
  double inertia = 0.0;
  int iterations = 0;
};

/// k-means++ seeding then Lloyd iterations. Empty clusters are re-seeded with
/// the point farthest from its centroid. Deterministic for fixed inputs.
KMeansResult kmeans(const FeatureMatrix& points, const KMeansConfig& cfg);

/// mcedd of every 16x16 patch, images in input order, patches row-major.
/// Images are cropped to a multiple of 16 first.
FeatureMatrix collect_training_descriptors(std::span<const Raster> images,
                                           const DescriptorParams& params = {},
                                           unsigned threads = 0);

struct TrainingInfo {
  std::string dataset_label;
  std::size_t image_count = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
};

/// M visual words over mcedd descriptors plus the parameters needed to
/// reproduce descriptors from the file alone.
class Codebook {
 public:
  Codebook(FeatureMatrix words, DescriptorParams params, TrainingInfo info);

  std::size_t size() const noexcept { return words_.rows(); }
  const FeatureMatrix& words() const noexcept { return words_; }
  const DescriptorParams& params() const noexcept { return params_; }
  const TrainingInfo& info() const noexcept { return info_; }

  /// FNV-1a 64 of the serialized file bytes.
  std::uint64_t id() const noexcept { return id_; }

  std::size_t nearest_word(std::span<const double> descriptor) const;

  std::string serialize() const;
  static Codebook parse(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static Codebook load(const std::filesystem::path& path);

 private:
  FeatureMatrix words_;
  DescriptorParams params_;
  TrainingInfo info_;
  std::uint64_t id_ = 0;
};

Codebook build_codebook(std::span<const Raster> training_images, const KMeansConfig& cfg,
                        const DescriptorParams& params = {}, std::string dataset_label = {});

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace etc_cbir
