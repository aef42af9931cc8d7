#include "etc_cbir/mcedd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "etc_cbir/error.hpp"

namespace etc_cbir {

namespace {

constexpr int kSubBlock = 4;
constexpr int kSubBlocksPerSide = kBlockSize / kSubBlock;
constexpr int kSubBlockCount = kSubBlocksPerSide * kSubBlocksPerSide;
constexpr int kPixels = kBlockSize * kBlockSize;
constexpr int kGroupOrder = kDihedralCount * 2;

// Per-pixel color bin plus the quadrant sums and color histogram of every
// 4x4 sub-block, for one polarity of a patch.
struct PatchStats {
  std::array<std::array<std::int32_t, 4>, kSubBlockCount> quadrant_sums{};
  std::array<std::array<std::uint16_t, kColorBins>, kSubBlockCount> color_counts{};
};

PatchStats gather(const Block& patch, bool negated, const DescriptorParams& params) {
  PatchStats stats;
  for (int y = 0; y < kBlockSize; ++y) {
    for (int x = 0; x < kBlockSize; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * kBlockSize + x) * kChannels;
      std::uint8_t r = patch[i], g = patch[i + 1], b = patch[i + 2];
      if (negated) {
        r = static_cast<std::uint8_t>(255 - r);
        g = static_cast<std::uint8_t>(255 - g);
        b = static_cast<std::uint8_t>(255 - b);
      }
      const int sub = (y / kSubBlock) * kSubBlocksPerSide + x / kSubBlock;
      const int quadrant = ((y % kSubBlock) / 2) * 2 + (x % kSubBlock) / 2;
      stats.quadrant_sums[sub][quadrant] += luma_milli(r, g, b);
      ++stats.color_counts[sub][color_bin(rgb_to_hsv(r, g, b), params)];
    }
  }
  return stats;
}

}  // namespace

void validate(const DescriptorParams& params) {
  if (3 + params.hue_bins != kColorBins) {
    throw Error(ErrorCode::invalid_argument, "hue_bins must be 21 (3 achromatic + 21 = 24 bins)");
  }
  const auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!unit(params.achromatic_v_black) || !unit(params.achromatic_v_white) ||
      !unit(params.achromatic_s) || !std::isfinite(params.edge_threshold) ||
      params.edge_threshold < 0.0) {
    throw Error(ErrorCode::invalid_argument, "descriptor thresholds out of range");
  }
}

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  const int max = std::max({r, g, b});
  const int min = std::min({r, g, b});
  const double v = max / 255.0;
  if (max == 0 || max == min) return {0.0, 0.0, v};
  const double delta = max - min;
  const double s = delta / max;
  double h;
  if (max == r) {
    h = 60.0 * ((g - b) / delta);
  } else if (max == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return {h, s, v};
}

int color_bin(const Hsv& hsv, const DescriptorParams& params) noexcept {
  if (hsv.v < params.achromatic_v_black) return 0;
  if (hsv.s < params.achromatic_s) return hsv.v > params.achromatic_v_white ? 1 : 2;
  const double sector = 360.0 / params.hue_bins;
  const int bin = 3 + static_cast<int>(std::floor(hsv.h / sector));
  return std::clamp(bin, 3, 2 + params.hue_bins);
}

TextureClass classify_quadrants(const std::array<std::int32_t, 4>& q,
                                const DescriptorParams& params) noexcept {
  // Responses in luma_milli-sum units, i.e. 4000x the 0-255 mean scale.
  const double responses[5] = {
      static_cast<double>(std::abs(q[0] - q[1] - q[2] + q[3])),
      static_cast<double>(std::abs(q[0] - q[1] + q[2] - q[3])),
      static_cast<double>(std::abs(q[0] + q[1] - q[2] - q[3])),
      std::numbers::sqrt2 * std::abs(q[0] - q[3]),
      std::numbers::sqrt2 * std::abs(q[1] - q[2]),
  };
  int best = 0;
  for (int i = 1; i < 5; ++i) {
    if (responses[i] > responses[best]) best = i;
  }
  if (responses[best] < params.edge_threshold * 4000.0) return TextureClass::no_edge;
  return static_cast<TextureClass>(best + 1);
}

TextureClass texture_class(const SubBlock& sub_block, const DescriptorParams& params) noexcept {
  std::array<std::int32_t, 4> sums{};
  for (int y = 0; y < kSubBlock; ++y) {
    for (int x = 0; x < kSubBlock; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * kSubBlock + x) * kChannels;
      sums[(y / 2) * 2 + x / 2] += luma_milli(sub_block[i], sub_block[i + 1], sub_block[i + 2]);
    }
  }
  return classify_quadrants(sums, params);
}

PatchDescriptor base_descriptor(const Block& patch, const DescriptorParams& params) {
  const PatchStats stats = gather(patch, false, params);
  std::array<int, kDescriptorDim> votes{};
  for (int sub = 0; sub < kSubBlockCount; ++sub) {
    const int texture = static_cast<int>(classify_quadrants(stats.quadrant_sums[sub], params));
    for (int c = 0; c < kColorBins; ++c) votes[texture * kColorBins + c] += stats.color_counts[sub][c];
  }
  PatchDescriptor out;
  for (int i = 0; i < kDescriptorDim; ++i) out[i] = votes[i] / static_cast<double>(kPixels);
  return out;
}

// Equivalent to averaging base_descriptor over g(patch) for all 16 group
// elements g. A symmetry maps sub-blocks onto sub-blocks and quadrants onto
// quadrants, so each transformed sub-block keeps its color histogram and sees
// its quadrant sums permuted; only the texture class has to be recomputed.
// Votes are integers, so the result is exact and order-free.
PatchDescriptor mcedd(const Block& patch, const DescriptorParams& params) {
  std::array<int, kDescriptorDim> votes{};
  for (const bool negated : {false, true}) {
    const PatchStats stats = gather(patch, negated, params);
    for (int sub = 0; sub < kSubBlockCount; ++sub) {
      const auto& sums = stats.quadrant_sums[sub];
      for (int code = 0; code < kDihedralCount; ++code) {
        std::array<std::int32_t, 4> moved;
        for (int k = 0; k < 4; ++k) {
          const Coord src = dihedral_source(dihedral_from_code(code), k / 2, k % 2, 2);
          moved[k] = sums[src.row * 2 + src.col];
        }
        const int texture = static_cast<int>(classify_quadrants(moved, params));
        for (int c = 0; c < kColorBins; ++c) {
          votes[texture * kColorBins + c] += stats.color_counts[sub][c];
        }
      }
    }
  }
  PatchDescriptor out;
  for (int i = 0; i < kDescriptorDim; ++i) {
    out[i] = votes[i] / static_cast<double>(kPixels * kGroupOrder);
  }
  return out;
}

}  // namespace etc_cbir
