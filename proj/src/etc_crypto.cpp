#include "etc_cbir/etc_crypto.hpp"

#include <charconv>
#include <random>
#include <sstream>

#include "etc_cbir/error.hpp"
#include "etc_cbir/image_io.hpp"
#include "etc_cbir/splitmix64.hpp"

namespace etc_cbir {

namespace {

constexpr std::string_view kKeyMagic = "ETC-KEY";
constexpr std::string_view kKeyVersion = "v1";

std::uint64_t parse_u64(const std::string& token) {
  std::uint64_t value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::parse_error, "bad key value '" + token + "'");
  }
  return value;
}

}  // namespace

KeySet keygen(std::optional<std::uint64_t> seed) {
  if (!seed) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  SplitMix64 rng(*seed);
  KeySet keys;
  keys.permutation_seed = rng.next();
  keys.transform_seed = rng.next();
  keys.negpos_seed = rng.next();
  return keys;
}

EncryptionPlan derive_plan(const KeySet& keys, int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::empty_grid, "no 16x16 blocks to scramble");
  }
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  EncryptionPlan plan;

  plan.permutation.resize(n);
  for (std::size_t i = 0; i < n; ++i) plan.permutation[i] = static_cast<std::uint32_t>(i);
  SplitMix64 perm_rng(keys.permutation_seed);
  for (std::size_t i = n - 1; i >= 1; --i) {
    std::swap(plan.permutation[i], plan.permutation[perm_rng.below(i + 1)]);
  }

  plan.transforms.resize(n);
  SplitMix64 transform_rng(keys.transform_seed);
  for (auto& t : plan.transforms) t = dihedral_from_code(static_cast<int>(transform_rng.below(8)));

  plan.negate.resize(n);
  SplitMix64 negpos_rng(keys.negpos_seed);
  for (auto& bit : plan.negate) bit = static_cast<std::uint8_t>(negpos_rng.below(2));
  return plan;
}

Raster encrypt(const Raster& img, const KeySet& keys) {
  require_block_aligned(img);
  const BlockGrid g = img.grid();
  const EncryptionPlan plan = derive_plan(keys, g.rows, g.cols);
  Raster out(img.width(), img.height());
  for (std::size_t j = 0; j < g.count(); ++j) {
    Block b = apply_dihedral(img.block(j), plan.transforms[j]);
    if (plan.negate[j]) b = negate_block(b);
    out.set_block(plan.permutation[j], b);
  }
  return out;
}

Raster decrypt(const Raster& img, const KeySet& keys) {
  require_block_aligned(img);
  const BlockGrid g = img.grid();
  const EncryptionPlan plan = derive_plan(keys, g.rows, g.cols);
  Raster out(img.width(), img.height());
  for (std::size_t j = 0; j < g.count(); ++j) {
    Block b = img.block(plan.permutation[j]);
    if (plan.negate[j]) b = negate_block(b);
    out.set_block(j, apply_dihedral(b, inverse(plan.transforms[j])));
  }
  return out;
}

std::string format_key(const KeySet& keys) {
  std::ostringstream os;
  os << kKeyMagic << ' ' << kKeyVersion << ' ' << keys.permutation_seed << ' '
     << keys.transform_seed << ' ' << keys.negpos_seed << '\n';
  return os.str();
}

KeySet parse_key(const std::string& text) {
  std::istringstream in(text);
  std::string magic, version, k1, k2, k3, extra;
  in >> magic >> version;
  if (magic != kKeyMagic || version != kKeyVersion) {
    throw Error(ErrorCode::format_version_mismatch, "expected 'ETC-KEY v1' header");
  }
  if (!(in >> k1 >> k2 >> k3)) throw Error(ErrorCode::truncated_file, "key file needs three values");
  if (in >> extra) throw Error(ErrorCode::parse_error, "trailing data in key file");
  return {parse_u64(k1), parse_u64(k2), parse_u64(k3)};
}

void save_key(const KeySet& keys, const std::filesystem::path& path) {
  const std::string text = format_key(keys);
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

KeySet load_key(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_key(std::string(bytes.begin(), bytes.end()));
}

}  // namespace etc_cbir
