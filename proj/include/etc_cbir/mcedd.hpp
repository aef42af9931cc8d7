#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "etc_cbir/raster.hpp"

namespace etc_cbir {

inline constexpr int kTextureClasses = 6;
inline constexpr int kColorBins = 24;
inline constexpr int kDescriptorDim = kTextureClasses * kColorBins;  // 144

/// Cell (texture, color) lives at index texture * 24 + color.
using PatchDescriptor = std::array<double, kDescriptorDim>;

struct DescriptorParams {
  double achromatic_v_black = 0.15;
  double achromatic_v_white = 0.85;
  double achromatic_s = 0.15;
  double edge_threshold = 14.0;  // 0-255 luminance scale
  int hue_bins = 21;

  bool operator==(const DescriptorParams&) const = default;
};

/// Throws invalid_argument unless 3 + hue_bins == 24 and thresholds are sane.
void validate(const DescriptorParams& params);

struct Hsv {
  double h;  // degrees, [0, 360)
  double s;  // [0, 1]
  double v;  // [0, 1]
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// 0 black, 1 white, 2 gray, 3..23 hue sectors.
int color_bin(const Hsv& hsv, const DescriptorParams& params = {}) noexcept;

enum class TextureClass : std::uint8_t {
  no_edge = 0,
  non_directional = 1,
  vertical = 2,
  horizontal = 3,
  diagonal_45 = 4,
  diagonal_135 = 5,
};

/// Luminance scaled by 1000: 299 R + 587 G + 114 B. Keeping it integral makes
/// quadrant sums exact, so classification never depends on summation order.
constexpr std::int32_t luma_milli(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return 299 * r + 587 * g + 114 * b;
}

/// Classifies from the four 2x2 quadrant sums of luma_milli (row-major
/// quadrants: top-left, top-right, bottom-left, bottom-right).
TextureClass classify_quadrants(const std::array<std::int32_t, 4>& quadrant_sums,
                                const DescriptorParams& params = {}) noexcept;

/// A 4x4 RGB sub-block, row-major, channels interleaved.
using SubBlock = std::array<std::uint8_t, 4 * 4 * kChannels>;

TextureClass texture_class(const SubBlock& sub_block, const DescriptorParams& params = {}) noexcept;

/// CEDD-style color x texture histogram of one orientation of a patch: each
/// 4x4 sub-block votes its 16 pixel colors into its texture row. Sums to 1.
PatchDescriptor base_descriptor(const Block& patch, const DescriptorParams& params = {});

/// Average of base_descriptor over the 16-element group generated by the 8
/// block symmetries and negation, hence invariant under every per-block
/// operation of the EtC cipher.
PatchDescriptor mcedd(const Block& patch, const DescriptorParams& params = {});

}  // namespace etc_cbir
