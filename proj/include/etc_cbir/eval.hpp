#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "etc_cbir/codebook.hpp"
#include "etc_cbir/raster.hpp"

namespace etc_cbir {

/// Average precision of one ranking over all N stored ids:
/// (1/G) * sum_n precision@n * [n-th result is relevant].
double average_precision(std::span<const std::string> ranking, const std::set<std::string>& truth);

double mean_average_precision(std::span<const double> aps);

struct ManifestEntry {
  std::string path;
  std::string group_id;
};

struct EvalManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> queries;  // entry paths; default: first member of each group
};

/// Two-column CSV `path,group_id`, header optional. Relative paths stay as
/// written; they double as image ids.
EvalManifest parse_manifest(const std::string& csv);
EvalManifest load_manifest(const std::filesystem::path& path);

struct CorpusImage {
  std::string id;
  std::string group_id;
  Raster image;
};

struct QueryAp {
  std::string id;
  double ap = 0.0;
};

struct ApReport {
  std::vector<QueryAp> per_query;
  double map = 0.0;
  std::size_t m = 0;
  std::string codebook_source;
  std::uint64_t seed = 0;
  bool encrypted = false;
};

std::string to_json(const ApReport& report);

struct EvalOutcome {
  ApReport report;
  /// Full ranking (all stored ids, best first) for each query id.
  std::map<std::string, std::vector<std::string>> rankings;
};

struct EncryptionOptions {
  /// Owner key of stored image i is keygen(key_seed + i); the user key of
  /// query q is keygen(~key_seed - q), so queries and stored copies of the
  /// same image never share a key.
  std::uint64_t key_seed = 0;
};

/// Indexes every corpus image (cropped to 16-multiples, encrypted when
/// `encryption` is set) and ranks each query against all of them. The query
/// itself stays in the database and counts as ground truth.
EvalOutcome evaluate(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                     const Codebook& codebook, std::optional<EncryptionOptions> encryption,
                     unsigned threads = 0);

struct ExperimentConfig {
  KMeansConfig kmeans;
  DescriptorParams params;
  std::string codebook_source;  // label echoed in the report
  std::optional<EncryptionOptions> encryption;
};

/// Builds the codebook from `codebook_images`, then runs evaluate().
EvalOutcome run_experiment(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                           std::span<const Raster> codebook_images, const ExperimentConfig& cfg);

/// File-backed variant: manifest CSV plus a directory of plain training images.
EvalOutcome run_experiment(const EvalManifest& manifest, const std::filesystem::path& manifest_dir,
                           const std::filesystem::path& codebook_source, ExperimentConfig cfg);

/// mAP when every query's ranking is a uniformly shuffled list of the corpus
/// ids; the chance-level reference for a retrieval run.
double shuffled_ranking_map(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                            std::uint64_t seed);

}  // namespace etc_cbir
