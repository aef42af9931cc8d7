#include "etc_cbir/retrieval_index.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>

#include "etc_cbir/error.hpp"
#include "etc_cbir/image_io.hpp"

namespace etc_cbir {

namespace {

constexpr std::string_view kIndexMagic = "ESIMPLE-INDEX";
constexpr std::string_view kIndexVersion = "v1";

void check_field(const std::string& value, std::string_view name, bool allow_empty) {
  if (!allow_empty && value.empty()) throw Error(ErrorCode::invalid_field, std::string(name) + " is empty");
  if (value.find_first_of("\t\r\n") != std::string::npos) {
    throw Error(ErrorCode::invalid_field, std::string(name) + " contains a tab or newline");
  }
}

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::parse_error, "bad number '" + std::string(text) + "'");
  }
  return value;
}

std::string header_value(const std::string& token, std::string_view key) {
  if (token.rfind(std::string(key) + "=", 0) != 0) {
    throw Error(ErrorCode::parse_error, "expected " + std::string(key) + "=..., got '" + token + "'");
  }
  return token.substr(key.size() + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

RetrievalIndex::RetrievalIndex(std::size_t dim, std::uint64_t codebook_id)
    : dim_(dim), codebook_id_(codebook_id) {}

RetrievalIndex::RetrievalIndex(RetrievalIndex&& other) noexcept
    : dim_(other.dim_),
      codebook_id_(other.codebook_id_),
      entries_(std::move(other.entries_)),
      by_id_(std::move(other.by_id_)) {}

std::size_t RetrievalIndex::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void RetrievalIndex::check_vector(const ESimpleVector& v) const {
  if (v.codebook_id != codebook_id_) {
    throw Error(ErrorCode::codebook_mismatch, "vector built with codebook " +
                                                  std::to_string(v.codebook_id) + ", index uses " +
                                                  std::to_string(codebook_id_));
  }
  if (v.values.size() != dim_) {
    throw Error(ErrorCode::dimension_mismatch, "vector length " + std::to_string(v.values.size()) +
                                                   ", index M=" + std::to_string(dim_));
  }
}

void RetrievalIndex::add(IndexEntry entry) {
  check_field(entry.image_id, "image_id", false);
  check_field(entry.owner_info, "owner_info", true);
  check_field(entry.stored_path, "stored_path", true);
  check_vector(entry.vector);
  std::unique_lock lock(mutex_);
  if (by_id_.contains(entry.image_id)) {
    throw Error(ErrorCode::duplicate_id, "image_id '" + entry.image_id + "' already indexed");
  }
  by_id_.emplace(entry.image_id, entries_.size());
  entries_.push_back(std::move(entry));
}

bool RetrievalIndex::contains(const std::string& image_id) const {
  std::shared_lock lock(mutex_);
  return by_id_.contains(image_id);
}

std::optional<IndexEntry> RetrievalIndex::get(const std::string& image_id) const {
  std::shared_lock lock(mutex_);
  const auto it = by_id_.find(image_id);
  if (it == by_id_.end()) return std::nullopt;
  return entries_[it->second];
}

std::vector<IndexEntry> RetrievalIndex::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::vector<RankedResult> RetrievalIndex::query(const ESimpleVector& q, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  check_vector(q);
  std::vector<RankedResult> scored;
  {
    std::shared_lock lock(mutex_);
    scored.reserve(entries_.size());
    for (const IndexEntry& e : entries_) {
      scored.push_back({e.image_id, std::sqrt(squared_distance(q.values, e.vector.values)), 0});
    }
  }
  const auto before = [](const RankedResult& a, const RankedResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.image_id < b.image_id;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    before);
  scored.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) scored[i].rank = i + 1;
  return scored;
}

std::string RetrievalIndex::serialize() const {
  std::shared_lock lock(mutex_);
  std::string out;
  out += kIndexMagic;
  out += ' ';
  out += kIndexVersion;
  out += " M=" + std::to_string(dim_) + " CB=" + std::to_string(codebook_id_) +
         " N=" + std::to_string(entries_.size()) + '\n';
  for (const IndexEntry& e : entries_) {
    out += e.image_id + '\t' + e.owner_info + '\t' + e.stored_path + '\t';
    for (std::size_t i = 0; i < e.vector.values.size(); ++i) {
      if (i > 0) out += ' ';
      out += format_double(e.vector.values[i]);
    }
    out += '\n';
  }
  return out;
}

RetrievalIndex RetrievalIndex::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, version, m_tok, cb_tok, n_tok;
  header >> magic >> version;
  if (magic != kIndexMagic || version != kIndexVersion) {
    throw Error(ErrorCode::format_version_mismatch, "expected 'ESIMPLE-INDEX v1' header");
  }
  if (!(header >> m_tok >> cb_tok >> n_tok)) throw Error(ErrorCode::truncated_file, "short index header");
  const auto m = parse_number<std::size_t>(header_value(m_tok, "M"));
  const auto cb = parse_number<std::uint64_t>(header_value(cb_tok, "CB"));
  const auto n = parse_number<std::size_t>(header_value(n_tok, "N"));

  RetrievalIndex index(m, cb);
  for (std::size_t i = 0; i < n; ++i) {
    // A line without its newline was cut off mid-write.
    if (!std::getline(in, line) || in.eof()) {
      throw Error(ErrorCode::truncated_file,
                  "index has " + std::to_string(i) + " of " + std::to_string(n) + " entries");
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw Error(fields.size() < 4 ? ErrorCode::truncated_file : ErrorCode::parse_error,
                  "entry " + std::to_string(i) + " has " + std::to_string(fields.size()) + " fields");
    }
    ESimpleVector v{{}, cb};
    std::istringstream values(fields[3]);
    std::string token;
    while (values >> token) v.values.push_back(parse_number<double>(token));
    if (v.values.size() != m) {
      throw Error(v.values.size() < m ? ErrorCode::truncated_file : ErrorCode::dimension_mismatch,
                  "entry " + std::to_string(i) + " has " + std::to_string(v.values.size()) + " values");
    }
    index.add({fields[0], std::move(v), fields[1], fields[2]});
  }
  return index;
}

void RetrievalIndex::save(const std::filesystem::path& path) const {
  const std::string text = serialize();
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

}  // namespace etc_cbir
