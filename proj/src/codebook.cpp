#include "etc_cbir/codebook.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "etc_cbir/error.hpp"
#include "etc_cbir/fnv1a.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/parallel.hpp"
#include "etc_cbir/splitmix64.hpp"

namespace etc_cbir {

namespace {

constexpr std::string_view kCodebookMagic = "ESIMPLE-CODEBOOK";
constexpr std::string_view kCodebookVersion = "v1";

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;
  double inertia = 0.0;
};

Assignment assign(const FeatureMatrix& points, const FeatureMatrix& centroids, unsigned threads) {
  const std::size_t n = points.rows();
  Assignment a;
  a.labels.resize(n);
  a.distances.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::size_t label = nearest_row(centroids, points.row(i));
    a.labels[i] = label;
    a.distances[i] = squared_distance(points.row(i), centroids.row(label));
  });
  for (const double d : a.distances) a.inertia += d;
  return a;
}

FeatureMatrix seed_plus_plus(const FeatureMatrix& points, std::size_t k, SplitMix64& rng) {
  const std::size_t n = points.rows();
  FeatureMatrix centroids(points.dim());
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto add_center = [&](std::size_t idx) {
    centroids.append(points.row(idx));
    const auto c = centroids.row(centroids.rows() - 1);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(points.row(i), c));
  };

  add_center(rng.below(n));
  while (centroids.rows() < k) {
    double total = 0.0;
    for (const double d : nearest) total += d;
    if (!(total > 0.0)) {
      // Every point already coincides with a center.
      add_center(rng.below(n));
      continue;
    }
    const double target = rng.unit() * total;
    double cumulative = 0.0;
    std::size_t chosen = n;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      last_positive = i;
      cumulative += nearest[i];
      if (cumulative > target) {
        chosen = i;
        break;
      }
    }
    add_center(chosen == n ? last_positive : chosen);
  }
  return centroids;
}

std::string next_line(std::istream& in, bool& ok) {
  std::string line;
  ok = static_cast<bool>(std::getline(in, line));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string field_value(const std::string& token, std::string_view key) {
  if (token.size() <= key.size() || token.compare(0, key.size(), key) != 0 ||
      token[key.size()] != '=') {
    throw Error(ErrorCode::parse_error, "expected " + std::string(key) + "=..., got '" + token + "'");
  }
  return token.substr(key.size() + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::parse_error, "bad number '" + text + "'");
  return value;
}

}  // namespace

void FeatureMatrix::append(std::span<const double> v) {
  if (v.size() != dim_) {
    throw Error(ErrorCode::dimension_mismatch,
                "vector of length " + std::to_string(v.size()) + " into dim " + std::to_string(dim_));
  }
  values_.insert(values_.end(), v.begin(), v.end());
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::size_t nearest_row(const FeatureMatrix& rows, std::span<const double> v) {
  if (v.size() != rows.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "query length " + std::to_string(v.size()) + " vs dim " + std::to_string(rows.dim()));
  }
  if (rows.rows() == 0) throw Error(ErrorCode::invalid_argument, "no rows to search");
  std::size_t best = 0;
  double best_d = squared_distance(rows.row(0), v);
  for (std::size_t i = 1; i < rows.rows(); ++i) {
    const double d = squared_distance(rows.row(i), v);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

KMeansResult kmeans(const FeatureMatrix& points, const KMeansConfig& cfg) {
  if (cfg.clusters < 1 || cfg.max_iters < 1 || !(cfg.tol > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "k-means needs M >= 1, max_iters >= 1, tol > 0");
  }
  const std::size_t n = points.rows();
  const std::size_t k = cfg.clusters;
  if (n < k) {
    throw Error(ErrorCode::too_few_points,
                std::to_string(n) + " points for " + std::to_string(k) + " clusters");
  }
  const std::size_t dim = points.dim();

  SplitMix64 rng(cfg.seed);
  KMeansResult result;
  result.initial_centroids = seed_plus_plus(points, k, rng);
  FeatureMatrix centroids = result.initial_centroids;

  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Assignment a = assign(points, centroids, cfg.threads);
    result.inertia_history.push_back(a.inertia);
    result.iterations = iter;

    FeatureMatrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(a.labels[i]);
      const auto p = points.row(i);
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
      ++counts[a.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto dst = centroids.row(c);
      if (counts[c] > 0) {
        const auto s = sums.row(c);
        for (std::size_t d = 0; d < dim; ++d) dst[d] = s[d] / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t farthest = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (a.distances[i] > a.distances[farthest]) farthest = i;
      }
      const auto p = points.row(farthest);
      std::copy(p.begin(), p.end(), dst.begin());
      a.distances[farthest] = -1.0;  // not reused by another empty cluster
    }

    const bool converged =
        previous == 0.0 || (std::isfinite(previous) && (previous - a.inertia) / previous < cfg.tol);
    previous = a.inertia;
    if (converged) break;
  }

  result.inertia = assign(points, centroids, cfg.threads).inertia;
  result.inertia_history.push_back(result.inertia);
  result.centroids = std::move(centroids);
  return result;
}

FeatureMatrix collect_training_descriptors(std::span<const Raster> images,
                                           const DescriptorParams& params, unsigned threads) {
  validate(params);
  std::vector<Raster> cropped;
  cropped.reserve(images.size());
  std::vector<std::size_t> offsets{0};
  for (const Raster& img : images) {
    cropped.push_back(crop_to_block_multiple(img));
    offsets.push_back(offsets.back() + cropped.back().grid().count());
  }
  const std::size_t total = offsets.back();
  if (total == 0) throw Error(ErrorCode::empty_training_set, "no training patches");

  FeatureMatrix out(total, kDescriptorDim);
  parallel_for(cropped.size(), threads, [&](std::size_t i) {
    const Raster& img = cropped[i];
    for (std::size_t j = 0; j < img.grid().count(); ++j) {
      const PatchDescriptor d = mcedd(img.block(j), params);
      auto dst = out.row(offsets[i] + j);
      std::copy(d.begin(), d.end(), dst.begin());
    }
  });
  return out;
}

Codebook::Codebook(FeatureMatrix words, DescriptorParams params, TrainingInfo info)
    : words_(std::move(words)), params_(params), info_(std::move(info)) {
  validate(params_);
  if (words_.dim() != static_cast<std::size_t>(kDescriptorDim)) {
    throw Error(ErrorCode::dimension_mismatch, "codebook words must have D=144");
  }
  if (words_.rows() == 0) throw Error(ErrorCode::invalid_argument, "codebook needs M >= 1");
  for (const double v : words_.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "non-finite codebook value");
  }
  id_ = fnv1a64(serialize());
}

std::size_t Codebook::nearest_word(std::span<const double> descriptor) const {
  return nearest_row(words_, descriptor);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string Codebook::serialize() const {
  std::string out;
  out.reserve(words_.rows() * kDescriptorDim * 8 + 128);
  out += kCodebookMagic;
  out += ' ';
  out += kCodebookVersion;
  out += " M=" + std::to_string(words_.rows()) + " D=" + std::to_string(kDescriptorDim) +
         " SEED=" + std::to_string(info_.seed) + '\n';
  out += "PARAMS vb=" + format_double(params_.achromatic_v_black) +
         " vw=" + format_double(params_.achromatic_v_white) +
         " s=" + format_double(params_.achromatic_s) +
         " te=" + format_double(params_.edge_threshold) + " hb=" + std::to_string(params_.hue_bins) +
         '\n';
  for (std::size_t m = 0; m < words_.rows(); ++m) {
    const auto w = words_.row(m);
    for (std::size_t d = 0; d < w.size(); ++d) {
      if (d > 0) out += ' ';
      out += format_double(w[d]);
    }
    out += '\n';
  }
  return out;
}

Codebook Codebook::parse(const std::string& text) {
  std::istringstream in(text);
  bool ok = false;

  std::istringstream header(next_line(in, ok));
  std::string magic, version, m_tok, d_tok, seed_tok;
  header >> magic >> version;
  if (!ok || magic != kCodebookMagic || version != kCodebookVersion) {
    throw Error(ErrorCode::format_version_mismatch, "expected 'ESIMPLE-CODEBOOK v1' header");
  }
  if (!(header >> m_tok >> d_tok >> seed_tok)) throw Error(ErrorCode::parse_error, "short codebook header");
  const auto m = parse_number<std::size_t>(field_value(m_tok, "M"));
  const auto d = parse_number<std::size_t>(field_value(d_tok, "D"));
  TrainingInfo info;
  info.seed = parse_number<std::uint64_t>(field_value(seed_tok, "SEED"));
  if (d != static_cast<std::size_t>(kDescriptorDim)) {
    throw Error(ErrorCode::dimension_mismatch, "codebook D=" + std::to_string(d) + ", expected 144");
  }

  std::istringstream params_line(next_line(in, ok));
  if (!ok) throw Error(ErrorCode::truncated_file, "missing PARAMS line");
  std::string tag, vb, vw, s, te, hb;
  if (!(params_line >> tag >> vb >> vw >> s >> te >> hb) || tag != "PARAMS") {
    throw Error(ErrorCode::parse_error, "malformed PARAMS line");
  }
  DescriptorParams params;
  params.achromatic_v_black = parse_number<double>(field_value(vb, "vb"));
  params.achromatic_v_white = parse_number<double>(field_value(vw, "vw"));
  params.achromatic_s = parse_number<double>(field_value(s, "s"));
  params.edge_threshold = parse_number<double>(field_value(te, "te"));
  params.hue_bins = parse_number<int>(field_value(hb, "hb"));

  FeatureMatrix words(static_cast<std::size_t>(kDescriptorDim));
  std::vector<double> row;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string line = next_line(in, ok);
    if (!ok) {
      throw Error(ErrorCode::truncated_file,
                  "codebook has " + std::to_string(i) + " of " + std::to_string(m) + " words");
    }
    std::istringstream values(line);
    row.clear();
    std::string token;
    while (values >> token) row.push_back(parse_number<double>(token));
    if (row.size() != static_cast<std::size_t>(kDescriptorDim)) {
      throw Error(ErrorCode::dimension_mismatch,
                  "word " + std::to_string(i) + " has " + std::to_string(row.size()) + " values");
    }
    words.append(row);
  }
  std::string rest;
  while (std::getline(in, rest)) {
    if (rest.find_first_not_of(" \t\r") != std::string::npos) {
      throw Error(ErrorCode::dimension_mismatch, "more word lines than M=" + std::to_string(m));
    }
  }
  Codebook cb(std::move(words), params, std::move(info));
  cb.id_ = fnv1a64(text);
  return cb;
}

void Codebook::save(const std::filesystem::path& path) const {
  const std::string text = serialize();
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Codebook Codebook::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

Codebook build_codebook(std::span<const Raster> training_images, const KMeansConfig& cfg,
                        const DescriptorParams& params, std::string dataset_label) {
  const FeatureMatrix points = collect_training_descriptors(training_images, params, cfg.threads);
  KMeansResult km = kmeans(points, cfg);
  TrainingInfo info{std::move(dataset_label), training_images.size(), cfg.seed, km.iterations};
  return Codebook(std::move(km.centroids), params, std::move(info));
}

}  // namespace etc_cbir
