#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "etc_cbir/raster.hpp"

namespace etc_cbir {

/// Secret key set of an EtC image: one seed per scrambling stage.
struct KeySet {
  std::uint64_t permutation_seed = 0;  // block permutation
  std::uint64_t transform_seed = 0;    // per-block rotation / flip
  std::uint64_t negpos_seed = 0;       // per-block negative-positive bit

  bool operator==(const KeySet&) const = default;
};

/// First three SplitMix64 outputs from `seed`; system entropy when empty.
KeySet keygen(std::optional<std::uint64_t> seed = std::nullopt);

/// Per-image scrambling schedule. Block j of the plain image is transformed by
/// transforms[j], negated when negate[j] is set, and lands at permutation[j].
struct EncryptionPlan {
  std::vector<std::uint32_t> permutation;
  std::vector<Dihedral> transforms;
  std::vector<std::uint8_t> negate;
};

EncryptionPlan derive_plan(const KeySet& keys, int rows, int cols);

Raster encrypt(const Raster& img, const KeySet& keys);
Raster decrypt(const Raster& img, const KeySet& keys);

/// `ETC-KEY v1 <k1> <k2> <k3>` in decimal.
std::string format_key(const KeySet& keys);
KeySet parse_key(const std::string& text);

void save_key(const KeySet& keys, const std::filesystem::path& path);
KeySet load_key(const std::filesystem::path& path);

}  // namespace etc_cbir
