#include "etc_cbir/eval.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>
#include <unordered_map>

#include "etc_cbir/error.hpp"
#include "etc_cbir/esimple.hpp"
#include "etc_cbir/etc_crypto.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/parallel.hpp"
#include "etc_cbir/retrieval_index.hpp"
#include "etc_cbir/splitmix64.hpp"

namespace etc_cbir {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::set<std::string> group_members(std::span<const CorpusImage> corpus, const std::string& group) {
  std::set<std::string> out;
  for (const CorpusImage& c : corpus) {
    if (c.group_id == group) out.insert(c.id);
  }
  return out;
}

const CorpusImage& find_image(std::span<const CorpusImage> corpus, const std::string& id) {
  const auto it = std::find_if(corpus.begin(), corpus.end(),
                               [&](const CorpusImage& c) { return c.id == id; });
  if (it == corpus.end()) throw Error(ErrorCode::unknown_id, "query '" + id + "' is not in the corpus");
  return *it;
}

}  // namespace

double average_precision(std::span<const std::string> ranking, const std::set<std::string>& truth) {
  if (truth.empty()) throw Error(ErrorCode::empty_truth_set, "ground-truth set is empty");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t n = 1; n <= ranking.size(); ++n) {
    if (truth.contains(ranking[n - 1])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(n);
    }
  }
  if (hits != truth.size()) {
    throw Error(ErrorCode::invalid_argument, "ranking is missing ground-truth ids");
  }
  return sum / static_cast<double>(truth.size());
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) throw Error(ErrorCode::no_queries, "no AP values");
  double sum = 0.0;
  for (const double ap : aps) sum += ap;
  return sum / static_cast<double>(aps.size());
}

EvalManifest parse_manifest(const std::string& csv) {
  EvalManifest manifest;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  std::set<std::string> seen_groups;
  std::set<std::string> seen_paths;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw Error(ErrorCode::parse_error, "manifest line without comma: " + line);
    ManifestEntry e{trim(line.substr(0, comma)), trim(line.substr(comma + 1))};
    const bool header = first && e.path == "path" && e.group_id == "group_id";
    first = false;
    if (header) continue;
    if (e.path.empty() || e.group_id.empty()) throw Error(ErrorCode::parse_error, "empty manifest field: " + line);
    if (!seen_paths.insert(e.path).second) throw Error(ErrorCode::duplicate_id, "manifest lists " + e.path + " twice");
    if (seen_groups.insert(e.group_id).second) manifest.queries.push_back(e.path);
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw Error(ErrorCode::no_queries, "manifest has no entries");
  return manifest;
}

EvalManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()));
}

std::string to_json(const ApReport& report) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  j["per_query"] = nlohmann::ordered_json::array();
  for (const QueryAp& q : report.per_query) j["per_query"].push_back({{"id", q.id}, {"ap", q.ap}});
  j["m"] = report.m;
  j["codebook_source"] = report.codebook_source;
  j["seed"] = report.seed;
  j["encrypted"] = report.encrypted;
  return j.dump(2);
}

EvalOutcome evaluate(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                     const Codebook& codebook, std::optional<EncryptionOptions> encryption,
                     unsigned threads) {
  if (queries.empty()) throw Error(ErrorCode::no_queries, "no query images");

  std::vector<Raster> stored(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    Raster img = crop_to_block_multiple(corpus[i].image);
    stored[i] = encryption ? encrypt(img, keygen(encryption->key_seed + i)) : std::move(img);
  });
  const auto vectors = esimple_batch(stored, codebook, threads);
  RetrievalIndex index(codebook.size(), codebook.id());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    index.add({corpus[i].id, vectors[i], corpus[i].group_id, corpus[i].id});
  }

  EvalOutcome outcome;
  std::vector<std::vector<std::string>> rankings(queries.size());
  std::vector<double> aps(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    const CorpusImage& query = find_image(corpus, queries[q]);
    Raster img = crop_to_block_multiple(query.image);
    if (encryption) img = encrypt(img, keygen(~encryption->key_seed - q));
    const auto results = index.query(esimple(img, codebook), corpus.size());
    for (const RankedResult& r : results) rankings[q].push_back(r.image_id);
    aps[q] = average_precision(rankings[q], group_members(corpus, query.group_id));
  });

  for (std::size_t q = 0; q < queries.size(); ++q) {
    outcome.report.per_query.push_back({queries[q], aps[q]});
    outcome.rankings[queries[q]] = std::move(rankings[q]);
  }
  outcome.report.map = mean_average_precision(aps);
  outcome.report.m = codebook.size();
  outcome.report.seed = codebook.info().seed;
  outcome.report.codebook_source = codebook.info().dataset_label;
  outcome.report.encrypted = encryption.has_value();
  return outcome;
}

EvalOutcome run_experiment(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                           std::span<const Raster> codebook_images, const ExperimentConfig& cfg) {
  if (codebook_images.empty()) throw Error(ErrorCode::empty_training_set, "codebook source is empty");
  const Codebook cb = build_codebook(codebook_images, cfg.kmeans, cfg.params, cfg.codebook_source);
  return evaluate(corpus, queries, cb, cfg.encryption, cfg.kmeans.threads);
}

EvalOutcome run_experiment(const EvalManifest& manifest, const std::filesystem::path& manifest_dir,
                           const std::filesystem::path& codebook_source, ExperimentConfig cfg) {
  std::vector<CorpusImage> corpus(manifest.entries.size());
  parallel_for(corpus.size(), cfg.kmeans.threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    std::filesystem::path p = e.path;
    if (p.is_relative()) p = manifest_dir / p;
    corpus[i] = {e.path, e.group_id, load_image(p)};
  });
  const auto training_paths = list_images(codebook_source);
  std::vector<Raster> training(training_paths.size());
  parallel_for(training.size(), cfg.kmeans.threads,
               [&](std::size_t i) { training[i] = load_image(training_paths[i]); });
  if (cfg.codebook_source.empty()) cfg.codebook_source = codebook_source.string();
  return run_experiment(corpus, manifest.queries, training, cfg);
}

double shuffled_ranking_map(std::span<const CorpusImage> corpus, std::span<const std::string> queries,
                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::string> ids;
  for (const CorpusImage& c : corpus) ids.push_back(c.id);
  std::vector<double> aps;
  for (const std::string& q : queries) {
    std::vector<std::string> ranking = ids;
    for (std::size_t i = ranking.size(); i-- > 1;) std::swap(ranking[i], ranking[rng.below(i + 1)]);
    aps.push_back(average_precision(ranking, group_members(corpus, find_image(corpus, q).group_id)));
  }
  return mean_average_precision(aps);
}

}  // namespace etc_cbir
